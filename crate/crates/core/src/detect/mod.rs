//! Right-edge detection on per-antenna RSSI sequences.
//!
//! The entry antenna is processed in reverse chronological order once the
//! exit antenna first sees the tag, so the last peak before the exit wins over
//! earlier false peaks. The exit antenna is processed forward, one sample at a
//! time, as reads arrive. Both detectors slide a fixed-size window and fire on
//! the first window where `max - current >= tau`.

mod baseline;
mod forward;
mod reference;
mod reversed;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{baseline_threshold_detect, ScanOrder};
pub use forward::{detect_right_edge_forward, ForwardDetector};
pub use reference::{offline_reference_edges, ReferenceEdges, ReferenceError};
pub use reversed::detect_right_edge_reversed;

/// One timestamped RSSI observation at a single antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssiSample {
    pub timestamp_us: u64,
    pub rssi_dbm: f64,
}

impl RssiSample {
    pub fn new(timestamp_us: u64, rssi_dbm: f64) -> Self {
        Self {
            timestamp_us,
            rssi_dbm,
        }
    }
}

/// Full configuration of the dual-antenna detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectionParams {
    /// Window size (samples) for the entry antenna.
    pub w1: usize,
    /// Window size (samples) for the exit antenna.
    pub w2: usize,
    /// Drop threshold (dB) for the entry antenna.
    pub tau1: f64,
    /// Drop threshold (dB) for the exit antenna.
    pub tau2: f64,
    /// Antenna separation along the walking path, meters.
    pub distance_m: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            w1: 14,
            w2: 14,
            tau1: 1.0,
            tau2: 1.0,
            distance_m: 4.0,
        }
    }
}

impl DetectionParams {
    /// Same window and threshold on both antennas.
    pub fn symmetric(w: usize, tau: f64, distance_m: f64) -> Self {
        Self {
            w1: w,
            w2: w,
            tau1: tau,
            tau2: tau,
            distance_m,
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        for (name, w) in [("w1", self.w1), ("w2", self.w2)] {
            if w < 2 {
                return Err(ParamsError::Window { name, value: w });
            }
        }
        for (name, tau) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(ParamsError::Threshold { name, value: tau });
            }
        }
        if !(self.distance_m.is_finite() && self.distance_m > 0.0) {
            return Err(ParamsError::Distance(self.distance_m));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("{name} must be at least 2 samples, got {value}")]
    Window { name: &'static str, value: usize },
    #[error("{name} must be a positive finite drop threshold, got {value}")]
    Threshold { name: &'static str, value: f64 },
    #[error("antenna distance must be positive and finite, got {0}")]
    Distance(f64),
}

/// A detected right edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeDetection {
    /// Timestamp reported as the edge; always the timestamp of an input sample.
    pub edge_timestamp_us: u64,
    /// Window maximum at the moment the drop condition fired.
    pub peak_rssi_dbm: f64,
    /// Forward-order index (into the input sequence or stream) of the sample
    /// whose RSSI satisfied the drop condition.
    pub trigger_index: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("window must hold at least 2 samples, got {0}")]
    Window(usize),
    #[error("drop threshold must be positive and finite, got {0}")]
    Threshold(f64),
    #[error("timestamps must be strictly increasing (index {index})")]
    NonMonotonic { index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpeedError {
    #[error("edge interval is not positive: start {t_start_us} us, end {t_end_us} us")]
    InvalidInterval { t_start_us: u64, t_end_us: u64 },
    #[error("antenna distance must be positive and finite, got {0}")]
    Distance(f64),
}

/// Speed in m/s from the two edge timestamps and the antenna spacing.
pub fn compute_gait_speed(t_start_us: u64, t_end_us: u64, distance_m: f64) -> Result<f64, SpeedError> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(SpeedError::Distance(distance_m));
    }
    if t_end_us <= t_start_us {
        return Err(SpeedError::InvalidInterval {
            t_start_us,
            t_end_us,
        });
    }
    let interval_s = (t_end_us - t_start_us) as f64 * 1e-6;
    Ok(distance_m / interval_s)
}

pub(crate) fn check_window(w: usize, tau: f64) -> Result<(), DetectError> {
    if w < 2 {
        return Err(DetectError::Window(w));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(DetectError::Threshold(tau));
    }
    Ok(())
}

pub(crate) fn check_monotonic(samples: &[RssiSample]) -> Result<(), DetectError> {
    match samples
        .windows(2)
        .position(|p| p[1].timestamp_us <= p[0].timestamp_us)
    {
        Some(i) => Err(DetectError::NonMonotonic { index: i + 1 }),
        None => Ok(()),
    }
}

/// Scans a window front to back keeping the first strictly greater value.
/// Returns the position (within the iteration order) of the maximum.
pub(crate) fn window_max<'a, I>(window: I) -> Option<(usize, &'a RssiSample)>
where
    I: IntoIterator<Item = &'a RssiSample>,
{
    let mut it = window.into_iter().enumerate();
    let mut best = it.next()?;
    for (i, s) in it {
        if s.rssi_dbm > best.1.rssi_dbm {
            best = (i, s);
        }
    }
    Some(best)
}
