#![allow(dead_code)]

use gaitspeed::detect::{DetectionParams, RssiSample};
use gaitspeed::session::{AntennaMap, TagRead};
use gaitspeed::sim::{build_corpus, Capture, CorpusSpec, CorpusWalk};
use proptest::prelude::*;

pub const EPC_A: &str = "300833B2DDD9014000000001";
pub const EPC_B: &str = "300833B2DDD9014000000002";

pub fn trace(points: &[(u64, f64)]) -> Vec<RssiSample> {
    points.iter().map(|&(t, r)| RssiSample::new(t, r)).collect()
}

/// Oracle edge: index of the reported sample and index of the trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleEdge {
    pub edge: usize,
    pub trigger: usize,
}

/// Every window `[j, j + w)` visited from the last start position down to
/// zero. The current value is the window's first forward element; the edge
/// is the largest index holding the window maximum.
pub fn oracle_reversed(s: &[RssiSample], w: usize, tau: f64) -> Option<OracleEdge> {
    if s.len() < w {
        return None;
    }
    for j in (0..=s.len() - w).rev() {
        let hi = s[j..j + w].iter().map(|x| x.rssi_dbm).fold(f64::NEG_INFINITY, f64::max);
        if hi - s[j].rssi_dbm >= tau {
            let edge = (j..j + w).rev().find(|&k| s[k].rssi_dbm == hi).unwrap();
            return Some(OracleEdge { edge, trigger: j });
        }
    }
    None
}

/// Every window `(i - w, i]` visited in forward order. The current value is
/// the window's last element; the edge is the sample just before it.
pub fn oracle_forward(s: &[RssiSample], w: usize, tau: f64) -> Option<OracleEdge> {
    (w - 1..s.len()).find_map(|i| {
        let hi = s[i + 1 - w..=i].iter().map(|x| x.rssi_dbm).fold(f64::NEG_INFINITY, f64::max);
        (hi - s[i].rssi_dbm >= tau).then_some(OracleEdge { edge: i - 1, trigger: i })
    })
}

/// Time reversal: sample `k` moves to index `n - 1 - k` with timestamp
/// `t_last - t`.
pub fn mirror(s: &[RssiSample]) -> Vec<RssiSample> {
    let last = s.last().map_or(0, |x| x.timestamp_us);
    s.iter().rev().map(|x| RssiSample::new(last - x.timestamp_us, x.rssi_dbm)).collect()
}

/// Random RSSI trace with up to three bumps over a noisy floor, quantized to
/// half a dB so equal maxima occur often.
pub fn arb_trace() -> impl Strategy<Value = Vec<RssiSample>> {
    (20usize..=300, prop::collection::vec((0.0f64..1.0, 3.0f64..25.0, 2.0f64..20.0), 0..=3), any::<u64>())
        .prop_map(|(n, peaks, seed)| {
            let mut state = seed | 1;
            let mut noise = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % 1000) as f64 / 1000.0 - 0.5
            };
            let mut t = 0u64;
            (0..n)
                .map(|i| {
                    t += 20_000 + (i as u64 * 7919) % 15_000;
                    let mut r = -66.0 + 2.0 * noise();
                    for &(pos, width, height) in &peaks {
                        let c = pos * n as f64;
                        let d = (i as f64 - c) / width;
                        r += height * (-0.5 * d * d).exp();
                    }
                    RssiSample::new(t, (r * 2.0).round() / 2.0)
                })
                .collect()
        })
}

pub fn reads_for(trace1: &[RssiSample], trace2: &[RssiSample], epc: &str) -> Vec<TagRead> {
    let mut reads: Vec<TagRead> = trace1
        .iter()
        .map(|s| TagRead::new(epc, 1, s.timestamp_us, s.rssi_dbm))
        .chain(trace2.iter().map(|s| TagRead::new(epc, 2, s.timestamp_us, s.rssi_dbm)))
        .collect();
    reads.sort_by_key(|r| r.timestamp_us);
    reads
}

pub fn corpus(n: usize, seed: u64) -> Vec<CorpusWalk> {
    build_corpus(&CorpusSpec {
        n,
        seed,
        ..Default::default()
    })
    .unwrap()
}

/// Rewrites a capture for another tag and shifts it in time.
pub fn retag(capture: &Capture, epc: &str, offset_us: u64) -> Vec<TagRead> {
    capture
        .shifted_reads(offset_us)
        .map(|mut r| {
            r.epc = epc.to_string();
            r
        })
        .collect()
}

pub fn default_traces(capture: &Capture) -> (Vec<RssiSample>, Vec<RssiSample>) {
    capture.traces(&AntennaMap::default())
}

pub fn params() -> DetectionParams {
    DetectionParams::default()
}

use std::sync::{Arc, Mutex};

use gaitspeed::session::{Engine, ServiceConfig, TrialResult};

/// Engine whose results land in a shared vector. Call inside a runtime.
pub fn collecting_engine(tags: &[(&str, &str)]) -> (Engine, Arc<Mutex<Vec<TrialResult>>>) {
    let mut config = ServiceConfig::default();
    for (label, epc) in tags {
        config.tags.insert(label.to_string(), epc.to_string());
    }
    let out = Arc::new(Mutex::new(Vec::new()));
    let sink = out.clone();
    let engine = Engine::new(&config, Arc::new(move |r: &TrialResult| sink.lock().unwrap().push(r.clone()))).unwrap();
    (engine, out)
}

/// Gap left between consecutive walks of one tag so the cooldown has ended.
pub const WALK_GAP_US: u64 = 30_000_000;

/// Routes every read, draining inboxes before they can overflow.
pub async fn feed(engine: &Engine, reads: &[gaitspeed::session::TagRead]) {
    for r in reads {
        assert_eq!(engine.route_read(r), gaitspeed::session::RouteOutcome::Accepted);
        if engine.stats().tags.iter().any(|t| t.pending > 900) {
            engine.flush().await;
        }
    }
    engine.flush().await;
}
