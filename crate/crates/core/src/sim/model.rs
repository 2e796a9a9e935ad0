//! Propagation model for the desk reader emulator.

use serde::{Deserialize, Serialize};

/// Log-distance path model with a near-field saturation clamp.
///
/// Inside `d_sat_m` the reported RSSI stops rising, which produces the flat
/// region seen near the peak of real traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PathLossModel {
    pub p0_dbm: f64,
    pub d0_m: f64,
    pub exponent: f64,
    pub d_sat_m: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            p0_dbm: -45.0,
            d0_m: 1.0,
            exponent: 2.0,
            d_sat_m: 0.8,
        }
    }
}

impl PathLossModel {
    pub fn rssi(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(self.d_sat_m);
        self.p0_dbm - 10.0 * self.exponent * (d / self.d0_m).log10()
    }
}

/// RSSI at `distance_m` under the default path model.
pub fn rssi_model(distance_m: f64) -> f64 {
    PathLossModel::default().rssi(distance_m)
}

/// Parabolic main-lobe attenuation, `min(12 (theta / beamwidth)^2, max)` dB,
/// with `theta` the off-boresight angle. The antennas face the walking path,
/// so boresight is the perpendicular from the antenna to the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AntennaPattern {
    pub beamwidth_deg: f64,
    pub max_attenuation_db: f64,
}

impl Default for AntennaPattern {
    fn default() -> Self {
        Self {
            beamwidth_deg: 70.0,
            max_attenuation_db: 20.0,
        }
    }
}

impl AntennaPattern {
    pub fn loss_db(&self, off_boresight_deg: f64) -> f64 {
        let r = off_boresight_deg / self.beamwidth_deg;
        (12.0 * r * r).min(self.max_attenuation_db)
    }

    /// Loss for a tag at `along_m` along the path and `lateral_m` from the wall.
    pub fn loss_at(&self, along_m: f64, lateral_m: f64) -> f64 {
        let theta = along_m.abs().atan2(lateral_m.abs()).to_degrees();
        self.loss_db(theta)
    }
}
