use std::collections::VecDeque;

use super::{check_monotonic, check_window, window_max, DetectError, EdgeDetection, RssiSample};

/// Entry-antenna right-edge detection.
///
/// Walks the sequence newest to oldest with a window of `w` samples. For each
/// full window the maximum is found by a strict greater-than scan starting at
/// the window's first (newest) element, so among equal maxima the latest
/// sample in forward time wins. The current sample is the window's last
/// (oldest) element. The first window with `max - current >= tau` returns the
/// maximum's timestamp.
///
/// Returns `Ok(None)` when fewer than `w` samples are given or the condition
/// never fires.
pub fn detect_right_edge_reversed(
    samples: &[RssiSample],
    w: usize,
    tau: f64,
) -> Result<Option<EdgeDetection>, DetectError> {
    check_window(w, tau)?;
    check_monotonic(samples)?;

    let n = samples.len();
    let mut window: VecDeque<(usize, &RssiSample)> = VecDeque::with_capacity(w + 1);
    for (rev_i, sample) in samples.iter().rev().enumerate() {
        window.push_back((n - 1 - rev_i, sample));
        if window.len() > w {
            window.pop_front();
        }
        if window.len() < w {
            continue;
        }
        let (_, peak) = window_max(window.iter().map(|(_, s)| *s)).expect("full window");
        let &(current_index, current) = window.back().expect("full window");
        if peak.rssi_dbm - current.rssi_dbm >= tau {
            return Ok(Some(EdgeDetection {
                edge_timestamp_us: peak.timestamp_us,
                peak_rssi_dbm: peak.rssi_dbm,
                trigger_index: current_index,
            }));
        }
    }
    Ok(None)
}
