use crate::detect::{baseline_threshold_detect, compute_gait_speed, DetectionParams, ScanOrder};
use crate::session::{AntennaMap, SessionSettings, TagIdentity, TagRead, TagSession, TrialResult};
use crate::sim::{Capture, LoadedCorpus, WalkKind};

use super::EvalError;

/// One walk with a known reference speed.
#[derive(Debug, Clone)]
pub struct EvalWalk {
    pub reads: Vec<TagRead>,
    pub reference_speed_mps: f64,
}

impl EvalWalk {
    pub fn from_capture(capture: &Capture) -> Result<Self, EvalError> {
        let truth = capture.header.ground_truth.ok_or(EvalError::MissingReference)?;
        Ok(Self {
            reads: capture.reads.clone(),
            reference_speed_mps: truth.true_speed_mps,
        })
    }

    /// Normal walks of a corpus; injected failures carry no usable reference.
    pub fn from_corpus(corpus: &LoadedCorpus) -> Result<Vec<Self>, EvalError> {
        corpus
            .manifest
            .walks
            .iter()
            .zip(&corpus.captures)
            .filter(|(m, _)| m.kind == WalkKind::Normal)
            .map(|(_, c)| Self::from_capture(c))
            .collect()
    }
}

fn anonymous_tag(reads: &[TagRead]) -> TagIdentity {
    reads
        .first()
        .and_then(|r| TagIdentity::new("walk", &r.epc).ok())
        .unwrap_or_else(|| TagIdentity::new("walk", "000000000000000000000000").expect("valid literal"))
}

/// Streams reads through a fresh session and returns every result,
/// including a final failure if a trial is left open at the end.
pub fn run_stream(
    reads: impl IntoIterator<Item = TagRead>,
    tag: TagIdentity,
    params: &DetectionParams,
    settings: SessionSettings,
    antennas: &AntennaMap,
) -> Vec<TrialResult> {
    let mut session = TagSession::new(tag, settings);
    let mut out = Vec::new();
    for r in reads {
        out.extend(session.process_read(antennas.role(r.antenna_port), r.sample(), params));
    }
    out.extend(session.expire_idle());
    out
}

/// The full online pipeline applied to a single recorded walk.
pub fn run_walk(reads: &[TagRead], params: &DetectionParams, antennas: &AntennaMap) -> TrialResult {
    let tag = anonymous_tag(reads);
    let results = run_stream(reads.iter().cloned(), tag.clone(), params, SessionSettings::default(), antennas);
    results
        .into_iter()
        .next()
        .unwrap_or_else(|| TrialResult::failure(tag, *params, 0, 0))
}

/// Speed from the fixed-threshold baseline with the same trigger structure:
/// the entry trace up to the first exit read is scanned in reverse, the exit
/// trace forward.
pub fn baseline_speed(reads: &[TagRead], threshold_dbm: f64, distance_m: f64, antennas: &AntennaMap) -> Option<f64> {
    let capture = Capture {
        header: Default::default(),
        reads: reads.to_vec(),
    };
    let (entry, exit) = capture.traces(antennas);
    let first_exit = exit.first()?.timestamp_us;
    let cut = entry.partition_point(|s| s.timestamp_us < first_exit);
    let t1 = baseline_threshold_detect(&entry[..cut], threshold_dbm, ScanOrder::Reverse)?;
    let t2 = baseline_threshold_detect(&exit, threshold_dbm, ScanOrder::Forward)?;
    compute_gait_speed(t1, t2, distance_m).ok()
}
