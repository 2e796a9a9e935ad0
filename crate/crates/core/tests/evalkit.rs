mod common;

use approx::assert_abs_diff_eq;
use common::*;
use gaitspeed::detect::DetectionParams;
use gaitspeed::eval::{
    baseline_speed, bland_altman, evaluate_params, linear_fit, mae, parameter_sweep, score, success_summary,
    threshold_search, EvalWalk, PairedMeasurement,
};
use gaitspeed::session::{AntennaMap, Classification, SessionSettings, TagIdentity};
use gaitspeed::sim::{build_corpus, CorpusSpec, WalkKind};
use proptest::prelude::*;

fn walks(n: usize, seed: u64) -> Vec<EvalWalk> {
    corpus(n, seed)
        .iter()
        .map(|w| EvalWalk::from_capture(&w.capture).unwrap())
        .collect()
}

fn arb_pairs() -> impl Strategy<Value = Vec<PairedMeasurement>> {
    prop::collection::vec((0.2f64..2.5, 0.2f64..2.5), 2..60)
        .prop_map(|v| v.into_iter().map(|(a, b)| PairedMeasurement::new(a, b)).collect())
}

proptest! {
    #[test]
    fn swapping_methods_flips_bias(pairs in arb_pairs()) {
        let a = bland_altman(&pairs).unwrap().report;
        let swapped: Vec<_> = pairs.iter().map(|p| p.swapped()).collect();
        let b = bland_altman(&swapped).unwrap().report;
        prop_assert!((a.bias_mps + b.bias_mps).abs() < 1e-12);
        let width = |r: &gaitspeed::eval::AgreementReport| r.loa_high_mps - r.loa_low_mps;
        prop_assert!((width(&a) - width(&b)).abs() < 1e-12);
        prop_assert!(a.loa_low_mps <= a.bias_mps && a.bias_mps <= a.loa_high_mps);
    }

    #[test]
    fn mae_is_zero_only_for_identical_pairs(pairs in arb_pairs()) {
        let m = mae(&pairs).unwrap();
        prop_assert!(m >= 0.0);
        let same: Vec<_> = pairs.iter().map(|p| PairedMeasurement::new(p.v_ref_mps, p.v_ref_mps)).collect();
        prop_assert_eq!(mae(&same).unwrap(), 0.0);
        if pairs.iter().any(|p| p.v_test_mps != p.v_ref_mps) {
            prop_assert!(m > 0.0);
        }
    }

    #[test]
    fn classification_is_a_partition(v in 0.0f64..3.0) {
        let c = gaitspeed::session::classify_result(v).unwrap();
        let expected = [
            (v == 0.0, Classification::SystemFailure),
            ((0.2..=2.0).contains(&v), Classification::Success),
            (v > 0.0 && !(0.2..=2.0).contains(&v), Classification::Erroneous),
        ];
        prop_assert_eq!(expected.iter().filter(|(hit, _)| *hit).count(), 1);
        prop_assert_eq!(expected.iter().find(|(hit, _)| *hit).unwrap().1, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sweep_cell_equals_a_fresh_run(w in 5usize..=20, tau in prop_oneof![Just(1.0), Just(2.0), Just(3.0)]) {
        let ws = walks(6, 5);
        let map = AntennaMap::default();
        let cells = parameter_sweep(&ws, &[5, w, 20], &[1.0, tau], 4.0, &map).unwrap();
        let cell = cells.iter().find(|c| c.w == w && c.tau == tau).unwrap();
        let fresh = evaluate_params(&ws, &DetectionParams::symmetric(w, tau, 4.0), &map);
        prop_assert_eq!(cell.mean_error_pct, fresh.mean_error_pct);
        prop_assert_eq!(cell.mae_mps, fresh.mae_mps);
        prop_assert_eq!(cell.successes, fresh.successes);
    }

    #[test]
    fn singleton_search_equals_direct_baseline(thr in -70i32..=-40) {
        let ws = walks(6, 5);
        let map = AntennaMap::default();
        let t = thr as f64;
        let rows = threshold_search(&ws, t, t, 1.0, 4.0, &map).unwrap();
        prop_assert_eq!(rows.len(), 1);
        let speeds: Vec<_> = ws.iter().map(|w| baseline_speed(&w.reads, t, 4.0, &map)).collect();
        let direct = score(&ws, &speeds);
        prop_assert_eq!(rows[0].mae_mps, direct.mae_mps);
        prop_assert_eq!(rows[0].success_count, direct.successes);
    }
}

#[test]
fn default_search_has_31_rows() {
    let ws = walks(4, 2);
    let rows = threshold_search(&ws, -70.0, -40.0, 1.0, 4.0, &AntennaMap::default()).unwrap();
    assert_eq!(rows.len(), 31);
    let max_rssi = ws
        .iter()
        .flat_map(|w| w.reads.iter().map(|r| r.rssi_dbm))
        .fold(f64::NEG_INFINITY, f64::max);
    let above = threshold_search(&ws, max_rssi + 1.0, max_rssi + 1.0, 1.0, 4.0, &AntennaMap::default()).unwrap();
    assert_eq!(above[0].success_count, 0);
}

#[test]
fn window_longer_than_every_trace_never_succeeds() {
    let ws = walks(4, 2);
    let cells = parameter_sweep(&ws, &[5000], &[1.0], 4.0, &AntennaMap::default()).unwrap();
    assert_eq!(cells[0].success_fraction, 0.0);
    assert_eq!(cells[0].mean_error_pct, None);
}

#[test]
fn sweep_is_order_independent() {
    let ws = walks(8, 9);
    let map = AntennaMap::default();
    let mut rev = ws.clone();
    rev.reverse();
    let a = parameter_sweep(&ws, &[5, 14], &[1.0, 3.0], 4.0, &map).unwrap();
    let b = parameter_sweep(&rev, &[5, 14], &[1.0, 3.0], 4.0, &map).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.successes, y.successes);
        assert_abs_diff_eq!(x.mean_error_pct.unwrap(), y.mean_error_pct.unwrap(), epsilon = 1e-9);
    }
}

#[test]
fn noiseless_walks_error_by_window() {
    // On a flat plateau the entry edge is the newest plateau sample inside
    // the window (ahead of the pass point by up to half the plateau) and the
    // exit edge trails the drop by a sample, so the interval is long and the
    // error floor is a few percent. A wider window pulls the entry edge
    // toward the center.
    let mut spec = CorpusSpec {
        n: 12,
        seed: 4,
        max_false_peaks: 0,
        ..Default::default()
    };
    spec.base.noise_sigma_dbm = 0.0;
    spec.base.rssi_step_dbm = 0.0;
    let ws: Vec<_> = build_corpus(&spec)
        .unwrap()
        .iter()
        .map(|w| EvalWalk::from_capture(&w.capture).unwrap())
        .collect();
    let cells = parameter_sweep(&ws, &(10..=20).collect::<Vec<_>>(), &[1.0], 4.0, &AntennaMap::default()).unwrap();
    let errs: Vec<f64> = cells.iter().map(|c| c.mean_error_pct.unwrap()).collect();
    assert!(cells.iter().all(|c| c.successes == c.n));
    assert!(errs.windows(2).all(|p| p[1] <= p[0] + 1e-12), "{errs:?}");
    assert!(errs.iter().all(|e| *e < 6.0), "{errs:?}");
}

#[test]
fn clinic_run_matches_injected_fractions() {
    let spec = CorpusSpec::clinic(100, 7);
    let walks = build_corpus(&spec).unwrap();
    let mut reads = Vec::new();
    let mut offset = 0;
    for w in &walks {
        reads.extend(retag(&w.capture, EPC_A, offset));
        offset += w.capture.span_us() + WALK_GAP_US;
    }
    let tag = TagIdentity::new("clinic", EPC_A).unwrap();
    let trials = gaitspeed::eval::run_stream(
        reads,
        tag,
        &DetectionParams::default(),
        SessionSettings::default(),
        &AntennaMap::default(),
    );
    let s = success_summary(&trials, &[]);
    let injected = |k: WalkKind| 100.0 * walks.iter().filter(|w| w.entry.kind == k).count() as f64 / walks.len() as f64;
    assert_eq!(s.total.n, 100);
    assert!((s.total.system_failure_pct - injected(WalkKind::Backwards)).abs() <= 2.0, "{s:?}");
    assert!((s.total.erroneous_pct - injected(WalkKind::Running)).abs() <= 2.0, "{s:?}");
    assert!((s.total.success_pct - injected(WalkKind::Normal)).abs() <= 2.0, "{s:?}");
}

#[test]
fn regression_examples() {
    let exact: Vec<(f64, f64)> = (60..90).map(|x| (x as f64, -0.01 * x as f64 + 1.6)).collect();
    let f = linear_fit(&exact).unwrap();
    assert_abs_diff_eq!(f.slope, -0.01, epsilon = 1e-12);
    assert_abs_diff_eq!(f.intercept, 1.6, epsilon = 1e-10);
    assert!(f.band(60.0, 90.0, 10).iter().all(|b| (b.upper - b.lower).abs() < 1e-9));
    let f = linear_fit(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).unwrap();
    assert_abs_diff_eq!(f.slope, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(f.intercept, 0.0, epsilon = 1e-12);
}
