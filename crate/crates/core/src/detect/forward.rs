use std::collections::VecDeque;

use super::{check_monotonic, check_window, window_max, DetectError, EdgeDetection, RssiSample};

/// Streaming exit-antenna detector.
///
/// Keeps the last `w` samples. Once the window is full, the maximum is taken
/// with a strict greater-than scan from the oldest element and compared with
/// the newest sample. When the drop reaches `tau` the detector reports the
/// second-to-last sample of the window as the edge and latches: later pushes
/// return `None` until [`ForwardDetector::reset`].
#[derive(Debug, Clone)]
pub struct ForwardDetector {
    w: usize,
    tau: f64,
    window: VecDeque<RssiSample>,
    fed: usize,
    fired: Option<EdgeDetection>,
}

impl ForwardDetector {
    pub fn new(w: usize, tau: f64) -> Result<Self, DetectError> {
        check_window(w, tau)?;
        Ok(Self {
            w,
            tau,
            window: VecDeque::with_capacity(w + 1),
            fed: 0,
            fired: None,
        })
    }

    pub fn window_size(&self) -> usize {
        self.w
    }

    pub fn threshold(&self) -> f64 {
        self.tau
    }

    /// Number of samples accepted since the last reset.
    pub fn samples_seen(&self) -> usize {
        self.fed
    }

    /// The latched detection, if the detector has fired.
    pub fn fired(&self) -> Option<EdgeDetection> {
        self.fired
    }

    pub fn last_timestamp(&self) -> Option<u64> {
        self.window.back().map(|s| s.timestamp_us)
    }

    pub fn reset(&mut self) {
        self.window.clear();
        self.fed = 0;
        self.fired = None;
    }

    /// Feeds one sample. Samples whose timestamp does not advance past the
    /// newest one are discarded without touching the window.
    pub fn push(&mut self, sample: RssiSample) -> Option<EdgeDetection> {
        if self.fired.is_some() {
            return None;
        }
        if matches!(self.last_timestamp(), Some(last) if sample.timestamp_us <= last) {
            return None;
        }
        self.window.push_back(sample);
        self.fed += 1;
        if self.window.len() > self.w {
            self.window.pop_front();
        }
        if self.window.len() < self.w {
            return None;
        }
        let (_, peak) = window_max(&self.window).expect("full window");
        if peak.rssi_dbm - sample.rssi_dbm >= self.tau {
            let edge = EdgeDetection {
                edge_timestamp_us: self.window[self.w - 2].timestamp_us,
                peak_rssi_dbm: peak.rssi_dbm,
                trigger_index: self.fed - 1,
            };
            self.fired = Some(edge);
            return Some(edge);
        }
        None
    }
}

/// Batch form of the forward detector over a complete trace.
pub fn detect_right_edge_forward(
    samples: &[RssiSample],
    w: usize,
    tau: f64,
) -> Result<Option<EdgeDetection>, DetectError> {
    check_monotonic(samples)?;
    let mut det = ForwardDetector::new(w, tau)?;
    Ok(samples.iter().find_map(|s| det.push(*s)))
}
