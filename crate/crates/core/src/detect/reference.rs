use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{detect_right_edge_forward, detect_right_edge_reversed, DetectError, DetectionParams, RssiSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEdges {
    pub t_start_us: u64,
    pub t_end_us: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReferenceError {
    #[error("no entry-antenna edge found")]
    EntryEdgeMissing,
    #[error("no exit-antenna edge found")]
    ExitEdgeMissing,
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// Offline edges for one complete walk: the reversed detector on the entry
/// trace up to (excluding) the first exit read, and the forward detector over
/// the whole exit trace.
pub fn offline_reference_edges(
    trace1: &[RssiSample],
    trace2: &[RssiSample],
    params: &DetectionParams,
) -> Result<ReferenceEdges, ReferenceError> {
    let first_exit = trace2.first().ok_or(ReferenceError::ExitEdgeMissing)?.timestamp_us;
    let cut = trace1.partition_point(|s| s.timestamp_us < first_exit);
    let start = detect_right_edge_reversed(&trace1[..cut], params.w1, params.tau1)?
        .ok_or(ReferenceError::EntryEdgeMissing)?;
    let end = detect_right_edge_forward(trace2, params.w2, params.tau2)?.ok_or(ReferenceError::ExitEdgeMissing)?;
    Ok(ReferenceEdges {
        t_start_us: start.edge_timestamp_us,
        t_end_us: end.edge_timestamp_us,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(offset: u64, pts: &[f64]) -> Vec<RssiSample> {
        pts.iter()
            .enumerate()
            .map(|(i, r)| RssiSample::new(offset + i as u64, *r))
            .collect()
    }

    const PLATEAU: [f64; 10] = [-60.0, -55.0, -50.0, -48.0, -48.0, -48.0, -50.0, -53.0, -56.0, -60.0];

    #[test]
    fn hand_traces_compose() {
        let params = DetectionParams::symmetric(4, 2.0, 4.0);
        let t1 = trace(0, &PLATEAU);
        let t2 = trace(100, &PLATEAU[..8]);
        let edges = offline_reference_edges(&t1, &t2, &params).unwrap();
        assert_eq!(edges.t_start_us, 5);
        assert_eq!(edges.t_end_us, 105);
    }

    #[test]
    fn empty_exit_trace() {
        let params = DetectionParams::symmetric(4, 2.0, 4.0);
        assert_eq!(
            offline_reference_edges(&trace(0, &PLATEAU), &[], &params),
            Err(ReferenceError::ExitEdgeMissing)
        );
    }

    #[test]
    fn entry_reads_after_exit_start_are_ignored() {
        let params = DetectionParams::symmetric(4, 2.0, 4.0);
        // Exit trace starts at t=7, so the entry trace is cut to t0..t6,
        // which still contains the rise and the plateau.
        let t1 = trace(0, &PLATEAU);
        let t2 = trace(7, &PLATEAU[..8]);
        let edges = offline_reference_edges(&t1, &t2, &params).unwrap();
        assert_eq!(edges.t_start_us, 5);
        // Cut before the plateau is complete: t0..t2 only rises.
        let t2 = trace(3, &PLATEAU[..8]);
        assert_eq!(
            offline_reference_edges(&t1, &t2, &params),
            Err(ReferenceError::EntryEdgeMissing)
        );
    }
}
