mod common;

use common::*;
use gaitspeed::detect::{
    baseline_threshold_detect, compute_gait_speed, detect_right_edge_forward, detect_right_edge_reversed,
    ForwardDetector, RssiSample, ScanOrder,
};
use proptest::prelude::*;

fn arb_w() -> impl Strategy<Value = usize> {
    2usize..=20
}

fn arb_tau() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(3.0), 0.5f64..6.0]
}

#[test]
fn hand_traces_match_oracles() {
    let plateau = trace(&[
        (0, -60.0),
        (1, -55.0),
        (2, -50.0),
        (3, -48.0),
        (4, -48.0),
        (5, -48.0),
        (6, -50.0),
        (7, -53.0),
        (8, -56.0),
        (9, -60.0),
    ]);
    assert_eq!(oracle_reversed(&plateau, 4, 2.0).map(|e| e.edge), Some(5));
    assert_eq!(oracle_forward(&plateau[..8], 4, 2.0).map(|e| e.edge), Some(5));
    let step = trace(&[(0, -45.0), (1, -45.0), (2, -45.0), (3, -45.0), (4, -50.0)]);
    assert_eq!(oracle_forward(&step, 4, 2.0), Some(OracleEdge { edge: 3, trigger: 4 }));
}

#[test]
fn plateau_mirror_picks_trailing_plateau_sample() {
    let s = trace(&[
        (0, -60.0),
        (1, -55.0),
        (2, -50.0),
        (3, -48.0),
        (4, -48.0),
        (5, -48.0),
        (6, -50.0),
        (7, -53.0),
    ]);
    let m = mirror(&s);
    let f = detect_right_edge_forward(&s, 4, 2.0).unwrap().unwrap();
    let r = detect_right_edge_reversed(&m, 4, 2.0).unwrap().unwrap();
    // Plateau is t = 3..=5 forward and t' = 2..=4 mirrored; each detector
    // reports the plateau sample nearest the drop in its own time.
    assert_eq!(f.edge_timestamp_us, 5);
    assert_eq!(r.edge_timestamp_us, 4);
    assert_eq!(r.trigger_index, s.len() - 1 - f.trigger_index);
}

#[test]
fn two_peak_trace_selects_later_peak() {
    let mut pts = Vec::new();
    for t in 0..10u64 {
        pts.push((t, -45.0 - 2.0 * (t as f64 - 4.0).abs()));
    }
    for t in 10..15u64 {
        pts.push((t, -60.0 + 2.0 * (t as f64 - 12.0).abs()));
    }
    for t in 15..30u64 {
        pts.push((t, -44.0 - 1.5 * (t as f64 - 19.0).abs()));
    }
    let s = trace(&pts);
    let edge = detect_right_edge_reversed(&s, 4, 2.0).unwrap().unwrap();
    assert!(edge.edge_timestamp_us > 12);
    assert_eq!(oracle_reversed(&s, 4, 2.0).map(|e| s[e.edge].timestamp_us), Some(edge.edge_timestamp_us));
}

#[test]
fn worked_interval_gives_reference_speed() {
    let v = compute_gait_speed(3_086_000, 8_410_000, 4.0).unwrap();
    assert!((v - 0.7513).abs() < 1e-4, "{v}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn reversed_matches_all_windows_oracle(s in arb_trace(), w in arb_w(), tau in arb_tau()) {
        let got = detect_right_edge_reversed(&s, w, tau).unwrap();
        let want = oracle_reversed(&s, w, tau);
        prop_assert_eq!(got.map(|e| e.edge_timestamp_us), want.map(|o| s[o.edge].timestamp_us));
        prop_assert_eq!(got.map(|e| e.trigger_index), want.map(|o| o.trigger));
    }

    #[test]
    fn forward_matches_all_windows_oracle(s in arb_trace(), w in arb_w(), tau in arb_tau()) {
        let got = detect_right_edge_forward(&s, w, tau).unwrap();
        let want = oracle_forward(&s, w, tau);
        prop_assert_eq!(got.map(|e| e.edge_timestamp_us), want.map(|o| s[o.edge].timestamp_us));
        prop_assert_eq!(got.map(|e| e.trigger_index), want.map(|o| o.trigger));
    }

    #[test]
    fn streaming_equals_batch(s in arb_trace(), w in arb_w(), tau in arb_tau(), split in 0usize..300) {
        let batch = detect_right_edge_forward(&s, w, tau).unwrap();
        let mut det = ForwardDetector::new(w, tau).unwrap();
        let cut = split.min(s.len());
        let mut fired = s[..cut].iter().find_map(|x| det.push(*x));
        if fired.is_none() {
            fired = s[cut..].iter().find_map(|x| det.push(*x));
        }
        prop_assert_eq!(fired, batch);
        prop_assert_eq!(det.fired(), batch);
    }

    #[test]
    fn detectors_are_deterministic(s in arb_trace(), w in arb_w(), tau in arb_tau()) {
        prop_assert_eq!(detect_right_edge_reversed(&s, w, tau).unwrap(), detect_right_edge_reversed(&s, w, tau).unwrap());
        prop_assert_eq!(detect_right_edge_forward(&s, w, tau).unwrap(), detect_right_edge_forward(&s, w, tau).unwrap());
    }

    #[test]
    fn forward_trigger_is_monotone_in_tau(s in arb_trace(), w in arb_w(), a in 0.5f64..6.0, b in 0.5f64..6.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let at_lo = detect_right_edge_forward(&s, w, lo).unwrap();
        let at_hi = detect_right_edge_forward(&s, w, hi).unwrap();
        if let Some(h) = at_hi {
            let l = at_lo.expect("a drop meeting the larger threshold meets the smaller one");
            prop_assert!(l.trigger_index <= h.trigger_index);
        }
    }

    #[test]
    fn mirrored_trace_fires_at_mirrored_sample(s in arb_trace(), w in arb_w(), tau in arb_tau()) {
        let m = mirror(&s);
        let n = s.len();
        let fwd = detect_right_edge_forward(&s, w, tau).unwrap();
        let rev = detect_right_edge_reversed(&m, w, tau).unwrap();
        prop_assert_eq!(fwd.is_some(), rev.is_some());
        if let (Some(f), Some(r)) = (fwd, rev) {
            let i = f.trigger_index;
            prop_assert_eq!(r.trigger_index, n - 1 - i);
            // The forward edge is the sample before the trigger; the reversed
            // edge is the earliest (in the original order) window maximum.
            prop_assert_eq!(f.edge_timestamp_us, s[i - 1].timestamp_us);
            let window = &s[i + 1 - w..=i];
            let k = window.iter().position(|x| x.rssi_dbm == r.peak_rssi_dbm).unwrap() + i + 1 - w;
            prop_assert_eq!(m[n - 1 - k].timestamp_us, r.edge_timestamp_us);
        }
    }

    #[test]
    fn last_peak_is_selected(
        heights in prop::collection::vec(-55.0f64..-40.0, 2..=4),
        widths in prop::collection::vec(1usize..4, 4),
        tau in 1.0f64..3.0,
        w in 2usize..6,
    ) {
        // Triangular peaks rising and falling by more than tau per sample,
        // separated by valleys at the floor.
        let step = tau + 0.5;
        let floor = -70.0;
        let mut vals = vec![floor; 3];
        let mut region_ends = Vec::new();
        for (k, &h) in heights.iter().enumerate() {
            let mut up = Vec::new();
            let mut v = h;
            while v > floor + step {
                up.push(v);
                v -= step;
            }
            up.reverse();
            vals.extend(&up);
            vals.extend(std::iter::repeat_n(h, widths[k]));
            region_ends.push(vals.len() - 1);
            let mut v = h - step;
            while v > floor {
                vals.push(v);
                v -= step;
            }
            vals.extend([floor; 3]);
        }
        let s: Vec<RssiSample> = vals.iter().enumerate().map(|(i, r)| RssiSample::new(i as u64 * 1000, *r)).collect();
        let e = detect_right_edge_reversed(&s, w, tau).unwrap().expect("last peak fires");
        for &end in &region_ends[..region_ends.len() - 1] {
            prop_assert!(e.edge_timestamp_us > s[end].timestamp_us);
        }
        prop_assert_eq!(Some(e.edge_timestamp_us), oracle_reversed(&s, w, tau).map(|o| s[o.edge].timestamp_us));
    }

    #[test]
    fn baseline_matches_linear_scan(s in arb_trace(), thr in -70.0f64..-40.0) {
        let fwd = s.iter().find(|x| x.rssi_dbm >= thr).map(|x| x.timestamp_us);
        let rev = s.iter().rev().find(|x| x.rssi_dbm >= thr).map(|x| x.timestamp_us);
        prop_assert_eq!(baseline_threshold_detect(&s, thr, ScanOrder::Forward), fwd);
        prop_assert_eq!(baseline_threshold_detect(&s, thr, ScanOrder::Reverse), rev);
    }

    #[test]
    fn speed_is_positive_and_finite(t0 in 0u64..1u64 << 40, dt in 1u64..100_000_000, d in 0.1f64..20.0) {
        let v = compute_gait_speed(t0, t0 + dt, d).unwrap();
        prop_assert!(v.is_finite() && v > 0.0);
        prop_assert!((v - d / (dt as f64 * 1e-6)).abs() <= 1e-9 * v);
    }
}
