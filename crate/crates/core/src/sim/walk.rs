use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{AntennaPattern, PathLossModel};
use crate::detect::{DetectionParams, RssiSample};

/// A short excursion of the entry-antenna RSSI before the real approach, e.g.
/// the tag wandering in and out of the beam while the patient waits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FalsePeak {
    /// Start time in seconds relative to the start of the walk; negative
    /// values fall before the walk begins.
    pub time_s: f64,
    pub duration_s: f64,
    pub peak_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct WalkProfile {
    pub speed_mps: f64,
    /// Perpendicular distance between the walking line and the antenna wall.
    pub lateral_offset_m: f64,
    /// Starting position along the path; antenna 1 sits at 0.
    pub start_x_m: f64,
    /// Per-antenna read rate.
    pub sample_rate_hz: f64,
    pub noise_sigma_dbm: f64,
    /// Correlation time of the RSSI noise; 0 draws independent noise per read.
    pub noise_corr_s: f64,
    pub false_peaks: Vec<FalsePeak>,
    pub seed: u64,
    /// Tag/body coupling offset added to every read.
    pub gain_offset_db: f64,
    /// Reader RSSI resolution; 0 reports unquantized values.
    pub rssi_step_dbm: f64,
    /// Reads weaker than this are never reported.
    pub floor_dbm: f64,
    pub path: PathLossModel,
    pub pattern: AntennaPattern,
}

impl Default for WalkProfile {
    fn default() -> Self {
        Self {
            speed_mps: 1.0,
            lateral_offset_m: 0.6,
            start_x_m: -3.0,
            sample_rate_hz: 30.0,
            noise_sigma_dbm: 0.15,
            noise_corr_s: 0.0,
            false_peaks: Vec::new(),
            seed: 0,
            gain_offset_db: 0.0,
            rssi_step_dbm: 0.5,
            floor_dbm: -65.0,
            path: PathLossModel::default(),
            pattern: AntennaPattern::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("walking speed must be in [0.2, 3.0] m/s, got {0}")]
    Speed(f64),
    #[error("sample rate must be positive, got {0}")]
    SampleRate(f64),
    #[error("noise sigma must be non-negative, got {0}")]
    Noise(f64),
    #[error("start position must be before antenna 1, got {0}")]
    Start(f64),
    #[error("false peak must have a positive duration")]
    FalsePeak,
}

impl WalkProfile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        if !(0.2..=3.0).contains(&self.speed_mps) {
            return Err(ProfileError::Speed(self.speed_mps));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(ProfileError::SampleRate(self.sample_rate_hz));
        }
        if !(self.noise_sigma_dbm.is_finite() && self.noise_sigma_dbm >= 0.0) {
            return Err(ProfileError::Noise(self.noise_sigma_dbm));
        }
        if !(self.start_x_m.is_finite() && self.start_x_m < 0.0) {
            return Err(ProfileError::Start(self.start_x_m));
        }
        if self.false_peaks.iter().any(|p| p.duration_s.is_nan() || p.duration_s <= 0.0) {
            return Err(ProfileError::FalsePeak);
        }
        Ok(())
    }
}

/// Closest-approach instants and the true speed of a synthetic walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroundTruth {
    pub true_t1_us: u64,
    pub true_t2_us: u64,
    pub true_speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Walk {
    pub trace1: Vec<RssiSample>,
    pub trace2: Vec<RssiSample>,
    pub truth: GroundTruth,
    /// Set when the entry trace is shorter than the entry window.
    pub short_entry: bool,
}

/// Simulates a straight walk past antennas at x = 0 and x = distance.
pub fn generate_walk(profile: &WalkProfile, params: &DetectionParams) -> Result<Walk, ProfileError> {
    profile.validate()?;
    let d = params.distance_m;
    let v = profile.speed_mps;
    let h = profile.lateral_offset_m;
    let lead_s = 1.0
        + profile
            .false_peaks
            .iter()
            .map(|p| -p.time_s)
            .fold(0.0f64, f64::max);
    let end_x = d - profile.start_x_m;
    let end_s = lead_s + (end_x - profile.start_x_m) / v;
    let position = |t: f64| {
        if t < lead_s {
            profile.start_x_m
        } else {
            profile.start_x_m + v * (t - lead_s)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let noise = Normal::new(0.0, profile.noise_sigma_dbm).expect("validated sigma");
    let period = 1.0 / profile.sample_rate_hz;
    let phase = rng.random::<f64>() * period;
    let rho = if profile.noise_corr_s > 0.0 {
        (-period / profile.noise_corr_s).exp()
    } else {
        0.0
    };
    let innovation = (1.0 - rho * rho).sqrt();
    let mut fading = [noise.sample(&mut rng), noise.sample(&mut rng)];

    let mut trace1 = Vec::new();
    let mut trace2 = Vec::new();
    let mut k = 0u64;
    loop {
        let t = phase + k as f64 * period;
        if t > end_s {
            break;
        }
        for (a, (antenna_x, offset, out)) in [(0.0, 0.0, &mut trace1), (d, 0.5 * period, &mut trace2)]
            .into_iter()
            .enumerate()
        {
            let ta = t + offset;
            let along = position(ta) - antenna_x;
            let dist = along.hypot(h);
            let mut rssi = profile.path.rssi(dist) - profile.pattern.loss_at(along, h) + profile.gain_offset_db;
            if antenna_x == 0.0 {
                for fp in &profile.false_peaks {
                    if let Some(bump) = false_peak_rssi(fp, ta - lead_s, profile.floor_dbm) {
                        rssi = rssi.max(bump);
                    }
                }
            }
            fading[a] = rho * fading[a] + innovation * noise.sample(&mut rng);
            let mut rssi = rssi + fading[a];
            if profile.rssi_step_dbm > 0.0 {
                rssi = (rssi / profile.rssi_step_dbm).round() * profile.rssi_step_dbm;
            }
            if rssi >= profile.floor_dbm {
                out.push(RssiSample::new(seconds_to_us(ta), rssi));
            }
        }
        k += 1;
    }

    let true_t1_us = seconds_to_us(lead_s - profile.start_x_m / v);
    let true_t2_us = true_t1_us + seconds_to_us(d / v);
    let short_entry = trace1.len() < params.w1;
    if short_entry {
        tracing::warn!(samples = trace1.len(), w1 = params.w1, "entry trace shorter than window");
    }
    Ok(Walk {
        trace1,
        trace2,
        truth: GroundTruth {
            true_t1_us,
            true_t2_us,
            true_speed_mps: v,
        },
        short_entry,
    })
}

fn seconds_to_us(t: f64) -> u64 {
    (t * 1e6).round() as u64
}

/// Raised-cosine bump from 6 dB under the floor up to the peak.
fn false_peak_rssi(fp: &FalsePeak, t_rel: f64, floor_dbm: f64) -> Option<f64> {
    let u = (t_rel - fp.time_s) / fp.duration_s;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let base = floor_dbm - 6.0;
    let s = (std::f64::consts::PI * u).sin();
    Some(base + (fp.peak_dbm - base) * s * s)
}
