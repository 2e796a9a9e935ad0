use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::{baseline_speed, run_walk, EvalWalk};
use super::stats::error_pct;
use super::EvalError;
use crate::detect::DetectionParams;
use crate::session::AntennaMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepCell {
    pub w: usize,
    pub tau: f64,
    /// Mean over walks that produced a speed; absent when none did.
    pub mean_error_pct: Option<f64>,
    pub mae_mps: Option<f64>,
    pub success_fraction: f64,
    pub successes: usize,
    pub n: usize,
}

/// Aggregate of per-walk speeds against their references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub mean_error_pct: Option<f64>,
    pub mae_mps: Option<f64>,
    pub successes: usize,
    pub n: usize,
}

impl Score {
    pub fn success_fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.successes as f64 / self.n as f64
        }
    }
}

/// Scores `speeds[i]` against `walks[i]`; `None` or zero counts as a miss.
pub fn score(walks: &[EvalWalk], speeds: &[Option<f64>]) -> Score {
    let hits: Vec<(f64, f64)> = walks
        .iter()
        .zip(speeds)
        .filter_map(|(w, s)| s.filter(|v| *v > 0.0).map(|v| (v, w.reference_speed_mps)))
        .collect();
    let k = hits.len();
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| (k > 0).then(|| hits.iter().map(f).sum::<f64>() / k as f64);
    Score {
        mean_error_pct: mean(&|(v, r)| error_pct(*v, *r).expect("references are positive")),
        mae_mps: mean(&|(v, r)| (v - r).abs()),
        successes: k,
        n: walks.len(),
    }
}

/// Speeds from the online pipeline, in corpus order.
pub fn pipeline_speeds(walks: &[EvalWalk], params: &DetectionParams, antennas: &AntennaMap) -> Vec<Option<f64>> {
    walks
        .par_iter()
        .map(|w| Some(run_walk(&w.reads, params, antennas).speed_mps).filter(|v| *v > 0.0))
        .collect()
}

pub fn evaluate_params(walks: &[EvalWalk], params: &DetectionParams, antennas: &AntennaMap) -> Score {
    score(walks, &pipeline_speeds(walks, params, antennas))
}

/// Runs the pipeline on every walk for every `(w, tau)` pair, using the same
/// value on both antennas.
pub fn parameter_sweep(
    walks: &[EvalWalk],
    w_values: &[usize],
    tau_values: &[f64],
    distance_m: f64,
    antennas: &AntennaMap,
) -> Result<Vec<SweepCell>, EvalError> {
    if walks.is_empty() {
        return Err(EvalError::Empty);
    }
    let grid: Vec<(f64, usize)> = tau_values
        .iter()
        .flat_map(|&tau| w_values.iter().map(move |&w| (tau, w)))
        .collect();
    grid.par_iter()
        .map(|&(tau, w)| {
            let params = DetectionParams::symmetric(w, tau, distance_m);
            params.validate()?;
            let s = evaluate_params(walks, &params, antennas);
            Ok(SweepCell {
                w,
                tau,
                mean_error_pct: s.mean_error_pct,
                mae_mps: s.mae_mps,
                success_fraction: s.success_fraction(),
                successes: s.successes,
                n: s.n,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BaselineRow {
    pub threshold_dbm: f64,
    pub mae_mps: Option<f64>,
    pub mean_error_pct: Option<f64>,
    pub success_count: usize,
    pub success_fraction: f64,
    pub n: usize,
}

/// Threshold grid `lo, lo + step, ..` up to and including `hi`.
pub fn threshold_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, EvalError> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
        return Err(EvalError::EmptyRange);
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

/// Evaluates the baseline at every threshold and ranks rows by MAE
/// (rows without any detection last).
pub fn threshold_search(
    walks: &[EvalWalk],
    lo: f64,
    hi: f64,
    step: f64,
    distance_m: f64,
    antennas: &AntennaMap,
) -> Result<Vec<BaselineRow>, EvalError> {
    if walks.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut rows: Vec<BaselineRow> = threshold_grid(lo, hi, step)?
        .par_iter()
        .map(|&thr| {
            let speeds: Vec<_> = walks
                .iter()
                .map(|w| baseline_speed(&w.reads, thr, distance_m, antennas))
                .collect();
            let s = score(walks, &speeds);
            BaselineRow {
                threshold_dbm: thr,
                mae_mps: s.mae_mps,
                mean_error_pct: s.mean_error_pct,
                success_count: s.successes,
                success_fraction: s.success_fraction(),
                n: s.n,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &BaselineRow| r.mae_mps.unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b)).then(a.threshold_dbm.total_cmp(&b.threshold_dbm))
    });
    Ok(rows)
}

/// Lowest-MAE row among those that measured at least `min_success_fraction`
/// of the walks. Thresholds that only fire on a handful of walks would
/// otherwise win on a tiny sample.
pub fn best_baseline(rows: &[BaselineRow], min_success_fraction: f64) -> Option<&BaselineRow> {
    rows.iter()
        .filter(|r| r.mae_mps.is_some() && r.success_fraction >= min_success_fraction)
        .min_by(|a, b| a.mae_mps.unwrap().total_cmp(&b.mae_mps.unwrap()))
}
