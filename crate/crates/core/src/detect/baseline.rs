use serde::{Deserialize, Serialize};

use super::RssiSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanOrder {
    Forward,
    Reverse,
}

/// Fixed-threshold crossing detector used as the comparison baseline.
///
/// Forward returns the first sample at or above `threshold_dbm`, reverse the
/// last one. `None` is a missed detection.
pub fn baseline_threshold_detect(samples: &[RssiSample], threshold_dbm: f64, scan_order: ScanOrder) -> Option<u64> {
    let crosses = |s: &&RssiSample| s.rssi_dbm >= threshold_dbm;
    match scan_order {
        ScanOrder::Forward => samples.iter().find(crosses),
        ScanOrder::Reverse => samples.iter().rev().find(crosses),
    }
    .map(|s| s.timestamp_us)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace() -> Vec<RssiSample> {
        [(0, -60.0), (1, -50.0), (2, -44.0), (3, -40.0), (4, -43.0), (5, -52.0)]
            .iter()
            .map(|&(t, r)| RssiSample::new(t, r))
            .collect()
    }

    #[test]
    fn forward_and_reverse_crossings() {
        assert_eq!(baseline_threshold_detect(&trace(), -45.0, ScanOrder::Forward), Some(2));
        assert_eq!(baseline_threshold_detect(&trace(), -45.0, ScanOrder::Reverse), Some(4));
    }

    #[test]
    fn miss_when_never_crossed() {
        let s: Vec<_> = trace().into_iter().map(|s| RssiSample::new(s.timestamp_us, s.rssi_dbm.min(-48.0))).collect();
        assert_eq!(baseline_threshold_detect(&s, -45.0, ScanOrder::Forward), None);
        assert_eq!(baseline_threshold_detect(&s, -45.0, ScanOrder::Reverse), None);
        assert_eq!(baseline_threshold_detect(&[], -45.0, ScanOrder::Reverse), None);
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(baseline_threshold_detect(&trace(), -40.0, ScanOrder::Forward), Some(3));
    }
}
