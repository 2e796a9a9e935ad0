//! Offline analysis: agreement statistics, parameter sweeps, the threshold
//! baseline, outcome tables and regression.

mod output;
mod pipeline;
pub mod reference;
mod stats;
mod summary;
mod sweep;

use thiserror::Error;

pub use output::{write_csv, write_json};
pub use pipeline::{baseline_speed, run_stream, run_walk, EvalWalk};
pub use stats::{
    bland_altman, error_pct, linear_fit, mae, AgreementPoint, AgreementReport, BandPoint, BlandAltman, LinearFit,
    PairedMeasurement, LOA_Z,
};
pub use summary::{load_exclusions, success_summary, Exclusion, OutcomeCounts, SuccessSummary};
pub use sweep::{
    best_baseline, evaluate_params, parameter_sweep, pipeline_speeds, score, threshold_grid, threshold_search,
    BaselineRow, Score, SweepCell,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("reference speed must be positive, got {0}")]
    InvalidReference(f64),
    #[error("speeds must be positive and finite, got {0}")]
    InvalidSpeed(f64),
    #[error("input is empty")]
    Empty,
    #[error("need at least {need} points, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("x values are all equal; the fit is singular")]
    SingularFit,
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("threshold range is empty")]
    EmptyRange,
    #[error("capture has no ground truth to compare against")]
    MissingReference,
    #[error(transparent)]
    Params(#[from] crate::detect::ParamsError),
    #[error("{0}")]
    Io(String),
}
