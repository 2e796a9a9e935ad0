use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::read::{AntennaAssignment, AntennaMap, AntennaRole};
use super::state::SessionSettings;
use super::tag::{RegistryError, TagRegistry};
use crate::detect::{DetectionParams, ParamsError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schemaVersion {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("antenna port {0:?} is not an integer in 1..=65535")]
    Port(String),
    #[error("tag {label:?}: {source}")]
    Tag { label: String, source: RegistryError },
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("session setting {0} must be positive")]
    Session(&'static str),
    #[error("wire adapter key {0} must be non-empty")]
    Wire(&'static str),
}

/// Registry, antenna roles, detection parameters and service settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ServiceConfig {
    pub schema_version: u32,
    /// Label to EPC.
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
    /// Port (as a string key) to role.
    #[serde(default = "default_antennas")]
    pub antennas: BTreeMap<String, AntennaRole>,
    #[serde(default)]
    pub detection: DetectionParams,
    #[serde(default)]
    pub session: SessionConfig,
    #[serde(default)]
    pub wire: WireAdapter,
    #[serde(default)]
    pub server: ServerConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tags: BTreeMap::new(),
            antennas: default_antennas(),
            detection: DetectionParams::default(),
            session: SessionConfig::default(),
            wire: WireAdapter::default(),
            server: ServerConfig::default(),
        }
    }
}

fn default_antennas() -> BTreeMap<String, AntennaRole> {
    AntennaMap::default()
        .assignments()
        .into_iter()
        .map(|a| (a.port.to_string(), a.role))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SessionConfig {
    pub cooldown_s: f64,
    pub idle_timeout_s: f64,
    pub entry_buffer_capacity: usize,
    pub inbox_capacity: usize,
    pub exit_rssi_floor_dbm: Option<f64>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            cooldown_s: 10.0,
            idle_timeout_s: 120.0,
            entry_buffer_capacity: 4096,
            inbox_capacity: 1024,
            exit_rssi_floor_dbm: None,
        }
    }
}

impl SessionConfig {
    pub fn settings(&self) -> SessionSettings {
        SessionSettings {
            cooldown_us: (self.cooldown_s * 1e6).round() as u64,
            idle_timeout_us: (self.idle_timeout_s * 1e6).round() as u64,
            entry_buffer_capacity: self.entry_buffer_capacity,
            exit_rssi_floor_dbm: self.exit_rssi_floor_dbm,
        }
    }
}

/// Key names used by the reader's JSON payload. Defaults match this
/// service's own wire format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct WireAdapter {
    pub epc: String,
    pub antenna_port: String,
    pub timestamp_us: String,
    pub rssi: String,
    /// Envelope key when the batch is an object rather than a bare array.
    pub batch: String,
}

impl Default for WireAdapter {
    fn default() -> Self {
        Self {
            epc: "epc".into(),
            antenna_port: "antennaPort".into(),
            timestamp_us: "timestampUs".into(),
            rssi: "rssi".into(),
            batch: "reads".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub trial_log: Option<PathBuf>,
    pub heartbeat_s: f64,
    pub subscriber_queue: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            trial_log: Some(PathBuf::from("data/trials.jsonl")),
            heartbeat_s: 15.0,
            subscriber_queue: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagEntry {
    pub label: String,
    pub epc: String,
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema_version));
        }
        self.registry()?;
        self.antenna_map()?;
        self.detection.validate()?;
        let s = &self.session;
        for (name, ok) in [
            ("cooldownS", s.cooldown_s.is_finite() && s.cooldown_s >= 0.0),
            ("idleTimeoutS", s.idle_timeout_s.is_finite() && s.idle_timeout_s > 0.0),
            ("entryBufferCapacity", s.entry_buffer_capacity > 0),
            ("inboxCapacity", s.inbox_capacity > 0),
            ("heartbeatS", self.server.heartbeat_s.is_finite() && self.server.heartbeat_s > 0.0),
            ("subscriberQueue", self.server.subscriber_queue > 0),
        ] {
            if !ok {
                return Err(ConfigError::Session(name));
            }
        }
        let w = &self.wire;
        for (name, key) in [
            ("epc", &w.epc),
            ("antennaPort", &w.antenna_port),
            ("timestampUs", &w.timestamp_us),
            ("rssi", &w.rssi),
            ("batch", &w.batch),
        ] {
            if key.is_empty() {
                return Err(ConfigError::Wire(name));
            }
        }
        Ok(())
    }

    pub fn registry(&self) -> Result<TagRegistry, ConfigError> {
        let mut reg = TagRegistry::new();
        for (label, epc) in &self.tags {
            reg.register(label, epc).map_err(|source| ConfigError::Tag {
                label: label.clone(),
                source,
            })?;
        }
        Ok(reg)
    }

    pub fn antenna_map(&self) -> Result<AntennaMap, ConfigError> {
        let assignments = self
            .antennas
            .iter()
            .map(|(port, &role)| match port.parse::<u16>() {
                Ok(p) if p > 0 => Ok(AntennaAssignment { port: p, role }),
                _ => Err(ConfigError::Port(port.clone())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AntennaMap::from_assignments(&assignments))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
schemaVersion = 1

[tags]
Tag1 = "300833B2DDD9014000000001"
Tag2 = "300833B2DDD9014000000002"

[antennas]
1 = "entry"
2 = "exit"
3 = "ignored"

[detection]
w1 = 14
w2 = 12
tau1 = 1.0
tau2 = 1.5
distanceM = 4.0

[session]
cooldownS = 8
exitRssiFloorDbm = -62.0

[wire]
epc = "tagId"
timestampUs = "firstSeenTimestamp"
"#;

    #[test]
    fn parses_documented_layout() {
        let cfg = ServiceConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.registry().unwrap().len(), 2);
        let map = cfg.antenna_map().unwrap();
        assert_eq!(map.role(3), AntennaRole::Ignored);
        assert_eq!(map.role(2), AntennaRole::Exit);
        assert_eq!(cfg.detection.w2, 12);
        let s = cfg.session.settings();
        assert_eq!(s.cooldown_us, 8_000_000);
        assert_eq!(s.idle_timeout_us, 120_000_000);
        assert_eq!(s.exit_rssi_floor_dbm, Some(-62.0));
        assert_eq!(cfg.wire.epc, "tagId");
        assert_eq!(cfg.wire.rssi, "rssi");
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ServiceConfig::from_toml_str(SAMPLE).unwrap();
        let again = ServiceConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
        let d = ServiceConfig::default();
        assert_eq!(ServiceConfig::from_toml_str(&d.to_toml_string()).unwrap(), d);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ServiceConfig::from_toml_str("schemaVersion = 2"),
            Err(ConfigError::Schema(2))
        ));
        assert!(matches!(
            ServiceConfig::from_toml_str("schemaVersion = 1\n[tags]\nTagX = \"XYZ\""),
            Err(ConfigError::Tag { .. })
        ));
        assert!(matches!(
            ServiceConfig::from_toml_str("schemaVersion = 1\n[detection]\nw1 = 1\nw2 = 14\ntau1 = 1.0\ntau2 = 1.0\ndistanceM = 4.0"),
            Err(ConfigError::Params(_))
        ));
        assert!(matches!(
            ServiceConfig::from_toml_str("schemaVersion = 1\n[antennas]\nzero = \"entry\""),
            Err(ConfigError::Port(_))
        ));
        assert!(ServiceConfig::from_toml_str("schemaVersion = 1\nbogus = 3").is_err());
    }
}
