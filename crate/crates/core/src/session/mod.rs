//! Per-tag trial lifecycle: registry, read routing, state machine, outcome
//! classification, persistence and the concurrent engine.

mod config;
mod engine;
mod log;
mod read;
mod result;
mod state;
mod tag;

pub use config::{ConfigError, ServerConfig, ServiceConfig, SessionConfig, TagEntry, WireAdapter, SCHEMA_VERSION};
pub use engine::{Engine, EngineStats, ResultSink, RouteOutcome, RuntimeConfig, TagStats};
pub use log::{load_trials, LoadReport, LogError, TrialFilter, TrialLog};
pub use read::{AntennaAssignment, AntennaMap, AntennaRole, TagRead};
pub use result::{
    classify_result, format_speed, Classification, InvalidSpeed, TrialResult, MAX_CLINICAL_SPEED, MIN_CLINICAL_SPEED,
};
pub use state::{Phase, SessionSettings, TagSession};
pub use tag::{normalize_epc, RegistryError, TagIdentity, TagRegistry};
