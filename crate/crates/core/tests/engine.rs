mod common;

use std::time::{Duration, Instant};

use common::*;
use gaitspeed::detect::offline_reference_edges;
use gaitspeed::session::{Classification, TagRead};
use gaitspeed::sim::{build_corpus, generate_walk, Capture, CorpusSpec, WalkKind, WalkProfile};
use proptest::prelude::*;

/// Concatenates walks for one tag with a gap after each.
fn back_to_back(walks: &[Capture], epc: &str) -> Vec<TagRead> {
    let mut offset = 0;
    let mut reads = Vec::new();
    for c in walks {
        reads.extend(retag(c, epc, offset));
        offset += c.span_us() + WALK_GAP_US;
    }
    reads
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn engine_edges_equal_offline_reference() {
    let walks = corpus(20, 11);
    let captures: Vec<Capture> = walks.iter().map(|w| w.capture.clone()).collect();
    let (engine, out) = collecting_engine(&[("p1", EPC_A)]);
    feed(&engine, &back_to_back(&captures, EPC_A)).await;
    let results = out.lock().unwrap().clone();
    assert_eq!(results.len(), captures.len());
    let mut offset = 0;
    for (c, r) in captures.iter().zip(&results) {
        let (t1, t2) = default_traces(c);
        let reference = offline_reference_edges(&t1, &t2, &params()).unwrap();
        assert_eq!(r.t_start_us, Some(reference.t_start_us + offset));
        assert_eq!(r.t_end_us, Some(reference.t_end_us + offset));
        offset += c.span_us() + WALK_GAP_US;
    }
}

#[tokio::test]
async fn outcomes_for_backwards_and_running_walks() {
    let spec = CorpusSpec {
        n: 10,
        seed: 3,
        backwards_fraction: 0.5,
        running_fraction: 0.5,
        ..Default::default()
    };
    let walks = build_corpus(&spec).unwrap();
    let (engine, out) = collecting_engine(&[("p1", EPC_A)]);
    let captures: Vec<Capture> = walks.iter().map(|w| w.capture.clone()).collect();
    feed(&engine, &back_to_back(&captures, EPC_A)).await;
    let results = out.lock().unwrap().clone();
    assert_eq!(results.len(), walks.len());
    for (w, r) in walks.iter().zip(&results) {
        match w.entry.kind {
            WalkKind::Backwards => assert_eq!(r.classification, Classification::SystemFailure),
            WalkKind::Running => assert_eq!(r.classification, Classification::Erroneous, "{}", r.speed_mps),
            WalkKind::Normal => unreachable!(),
        }
    }
}

#[tokio::test]
async fn worked_speed_walk_is_a_success() {
    let profile = WalkProfile {
        speed_mps: 0.751,
        seed: 5,
        ..Default::default()
    };
    let walk = generate_walk(&profile, &params()).unwrap();
    let capture = Capture::from_walk(&walk, Some(&profile), EPC_A, 4.0, (1, 2));
    let (engine, out) = collecting_engine(&[("p1", EPC_A)]);
    feed(&engine, &capture.reads).await;
    let r = out.lock().unwrap()[0].clone();
    assert_eq!(r.classification, Classification::Success);
    assert!((r.speed_mps - 0.751).abs() / 0.751 < 0.03, "{}", r.speed_mps);
}

#[tokio::test]
async fn conservation_over_mixed_reads() {
    let (engine, _) = collecting_engine(&[("p1", EPC_A), ("p2", EPC_B)]);
    let epcs = [EPC_A, EPC_B, "300833B2DDD90140000000FF"];
    for i in 0..3000u64 {
        let epc = epcs[(i % 3) as usize];
        let port = (i % 4) as u16;
        engine.route_read(&TagRead::new(epc, port, i * 1000, -60.0));
    }
    let s = engine.stats();
    assert_eq!(s.submitted, 3000);
    assert_eq!(s.accepted + s.ignored() + s.overflow, s.submitted);
    assert_eq!(s.ignored_unknown_epc, 1000);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn stalled_tag_does_not_delay_others() {
    let walks = corpus(2, 21);
    let (engine, out) = collecting_engine(&[("slow", EPC_A), ("fast", EPC_B)]);
    engine.stall_tag("slow", Duration::from_secs(3)).unwrap();
    for r in retag(&walks[0].capture, EPC_A, 0).iter().cycle().take(2000) {
        engine.route_read(r);
    }
    let t0 = Instant::now();
    for r in retag(&walks[1].capture, EPC_B, 0) {
        engine.route_read(&r);
    }
    loop {
        if out.lock().unwrap().iter().any(|r| r.tag.label == "fast") {
            break;
        }
        assert!(t0.elapsed() < Duration::from_millis(100), "fast tag blocked");
        tokio::time::sleep(Duration::from_millis(1)).await;
    }
    let s = engine.stats();
    let slow = s.tags.iter().find(|t| t.label == "slow").unwrap();
    // The task may already hold one read when the stall begins.
    assert!((2000 - 1025..=2000 - 1024).contains(&slow.overflow), "{}", slow.overflow);
    assert_eq!(s.tags.iter().find(|t| t.label == "fast").unwrap().overflow, 0);
}

fn run_engine(reads: &[TagRead], tags: &[(&str, &str)]) -> Vec<gaitspeed::session::TrialResult> {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let (engine, out) = collecting_engine(tags);
        feed(&engine, reads).await;
        let v = out.lock().unwrap().clone();
        v
    })
}

fn strip_time(mut v: Vec<gaitspeed::session::TrialResult>) -> Vec<(Option<u64>, Option<u64>, String)> {
    v.sort_by_key(|r| r.t_end_us);
    v.into_iter().map(|r| (r.t_start_us, r.t_end_us, r.tag.label)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn interleaved_tags_do_not_interact(seed in 0u64..1000, shift in 0u64..3_000_000) {
        let walks = corpus(2, seed);
        let a = retag(&walks[0].capture, EPC_A, 0);
        let b = retag(&walks[1].capture, EPC_B, shift);
        let mut mixed: Vec<TagRead> = a.iter().chain(&b).cloned().collect();
        mixed.sort_by_key(|r| r.timestamp_us);
        let tags = [("a", EPC_A), ("b", EPC_B)];
        let together = run_engine(&mixed, &tags);
        let only_a = run_engine(&a, &tags);
        let only_b = run_engine(&b, &tags);
        let split = |label: &str| strip_time(together.iter().filter(|r| r.tag.label == label).cloned().collect());
        prop_assert_eq!(split("a"), strip_time(only_a));
        prop_assert_eq!(split("b"), strip_time(only_b));
    }
}
