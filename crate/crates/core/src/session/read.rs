use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::detect::RssiSample;

/// One reader observation as it arrives on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TagRead {
    pub epc: String,
    pub antenna_port: u16,
    pub timestamp_us: u64,
    #[serde(rename = "rssi")]
    pub rssi_dbm: f64,
}

impl TagRead {
    pub fn new(epc: impl Into<String>, antenna_port: u16, timestamp_us: u64, rssi_dbm: f64) -> Self {
        Self {
            epc: epc.into(),
            antenna_port,
            timestamp_us,
            rssi_dbm,
        }
    }

    pub fn sample(&self) -> RssiSample {
        RssiSample::new(self.timestamp_us, self.rssi_dbm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AntennaRole {
    Entry,
    Exit,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntennaAssignment {
    pub port: u16,
    pub role: AntennaRole,
}

/// Port to role lookup; unmapped ports are treated as ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AntennaMap {
    roles: BTreeMap<u16, AntennaRole>,
}

impl Default for AntennaMap {
    fn default() -> Self {
        Self::from_assignments(&[
            AntennaAssignment {
                port: 1,
                role: AntennaRole::Entry,
            },
            AntennaAssignment {
                port: 2,
                role: AntennaRole::Exit,
            },
        ])
    }
}

impl AntennaMap {
    pub fn from_assignments(assignments: &[AntennaAssignment]) -> Self {
        Self {
            roles: assignments.iter().map(|a| (a.port, a.role)).collect(),
        }
    }

    pub fn role(&self, port: u16) -> AntennaRole {
        self.roles.get(&port).copied().unwrap_or(AntennaRole::Ignored)
    }

    pub fn assignments(&self) -> Vec<AntennaAssignment> {
        self.roles
            .iter()
            .map(|(&port, &role)| AntennaAssignment { port, role })
            .collect()
    }

    /// First port carrying `role`, if any.
    pub fn port_for(&self, role: AntennaRole) -> Option<u16> {
        self.roles.iter().find(|(_, r)| **r == role).map(|(p, _)| *p)
    }
}
