use std::collections::{BTreeSet, HashMap};

use framesel_core::budget::BudgetPlan;
use framesel_core::model::BoundingBox;
use framesel_core::model::FrameRecord;
use framesel_core::pipeline::{FnScorer, PrecomputedScores};
use framesel_core::pool::{run_cycle, CycleOptions, LabeledFrame, PoolState};
use framesel_core::selection::Strategy;
use framesel_core::stats::{report_statistics, AnnotationFilter};
use framesel_core::Error;
use proptest::prelude::*;

fn catalog(videos: usize, per_video: usize) -> Vec<FrameRecord> {
    (0..videos)
        .flat_map(|v| {
            (0..per_video).map(move |t| FrameRecord::video(format!("v{v}_{t:04}"), format!("v{v}"), t as i64))
        })
        .collect()
}

fn hash_score(f: &FrameRecord, cycle: u32) -> f64 {
    let mut x = f
        .frame_id
        .bytes()
        .fold(cycle as u64 + 1, |a, c| a.wrapping_mul(31).wrapping_add(c as u64));
    x ^= x >> 29;
    (x % 10_000) as f64 / 10_000.0
}

#[test]
fn save_load_resumes_identically() {
    let frames = catalog(5, 300);
    let scorer = FnScorer(|f: &FrameRecord, c: u32| Ok(hash_score(f, c)));
    let plan = BudgetPlan::new(100, 20).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for strategy in [Strategy::Proposed, Strategy::GuidedRandom] {
        let opts = CycleOptions {
            strategy,
            workers: Some(1),
            ..Default::default()
        };
        let mut straight = PoolState::new(frames.iter().map(|f| f.frame_id.clone()), 9);
        let mut resumed = straight.clone();
        for _ in 0..5 {
            run_cycle(&mut straight, &frames, &scorer, &plan, &opts).unwrap();
        }
        let path = dir.path().join("pool.json");
        for _ in 0..2 {
            run_cycle(&mut resumed, &frames, &scorer, &plan, &opts).unwrap();
        }
        resumed.save(&path).unwrap();
        let mut resumed = PoolState::load(&path).unwrap();
        for _ in 0..3 {
            run_cycle(&mut resumed, &frames, &scorer, &plan, &opts).unwrap();
        }
        assert_eq!(straight, resumed);
        assert!(matches!(
            run_cycle(&mut straight, &frames, &scorer, &plan, &opts),
            Err(Error::BudgetExhausted {
                completed: 5,
                total: 5
            })
        ));
    }
}

#[test]
fn pool_is_conserved() {
    let frames = catalog(3, 400);
    let scorer = FnScorer(|f: &FrameRecord, c: u32| Ok(hash_score(f, c)));
    let plan = BudgetPlan::new(150, 30).unwrap();
    let mut pool = PoolState::new(frames.iter().map(|f| f.frame_id.clone()), 1);
    let opts = CycleOptions::default();
    for _ in 0..plan.cycles() {
        let before: BTreeSet<String> = pool.unlabeled.clone();
        let report = run_cycle(&mut pool, &frames, &scorer, &plan, &opts).unwrap();
        assert_eq!(pool.unlabeled.len() + report.selected.len(), before.len());
        assert!(report
            .selected
            .iter()
            .all(|id| before.contains(id) && !pool.unlabeled.contains(id)));
        assert_eq!(pool.total(), frames.len());
        pool.check_invariants().unwrap();
    }
}

#[test]
fn corrupted_state_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.json");
    PoolState::new(["a", "b"], 3).save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap().replace("\"a\"", "\"c\"");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(PoolState::load(&path), Err(Error::CorruptState(_))));
}

#[test]
fn precomputed_scores_drive_still_selection() {
    let frames: Vec<FrameRecord> = (0..10).map(|i| FrameRecord::still(format!("s{i}"))).collect();
    let scores: HashMap<String, f64> = (0..10).map(|i| (format!("s{i}"), i as f64)).collect();
    let plan = BudgetPlan::new(3, 3).unwrap();
    let mut pool = PoolState::new(frames.iter().map(|f| f.frame_id.clone()), 0);
    let opts = CycleOptions {
        scenario: framesel_core::selection::Scenario::Still,
        ..Default::default()
    };
    let report = run_cycle(&mut pool, &frames, &PrecomputedScores(scores), &plan, &opts).unwrap();
    assert_eq!(report.selected, vec!["s9", "s8", "s7"]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn save_load_roundtrip(n in 1usize..60, picks in prop::collection::vec((0u32..4, any::<prop::sample::Index>()), 0..20), seed in any::<u64>()) {
        let frames = catalog(2, n);
        let mut pool = PoolState::new(frames.iter().map(|f| f.frame_id.clone()), seed);
        let rules = framesel_core::temporal::TemporalRuleConfig::default();
        for (cycle, idx) in picks {
            let f = &frames[idx.index(frames.len())];
            if pool.unlabeled.remove(&f.frame_id) {
                pool.labeled.push(LabeledFrame { cycle, frame_id: f.frame_id.clone() });
                pool.ledger.record_selection(f, &rules);
            }
        }
        pool.cycle_index = 4;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        pool.save(&path).unwrap();
        prop_assert_eq!(PoolState::load(&path).unwrap(), pool);
    }

    #[test]
    fn stats_match_recount(counts in prop::collection::vec((0usize..5, 0u32..3), 1..40)) {
        let catalog: Vec<FrameRecord> = counts.iter().enumerate().map(|(i, &(n, _))| {
            let mut f = FrameRecord::still(format!("f{i}"));
            // Alternate boxes that pass and fail the filter.
            f.annotations = Some((0..n).map(|j| {
                let h = if j % 2 == 0 { 80.0 } else { 30.0 };
                BoundingBox::new(0.0, 0.0, 0.4 * h, h, "pedestrian").unwrap()
            }).collect());
            f
        }).collect();
        let mut pool = PoolState::new(Vec::<String>::new(), 0);
        pool.cycle_index = 3;
        for (i, &(_, c)) in counts.iter().enumerate() {
            pool.labeled.push(LabeledFrame { cycle: c, frame_id: format!("f{i}") });
        }
        let stats = report_statistics(&pool, &catalog, Some(&AnnotationFilter::default()));
        for c in 0..3u32 {
            let rows: Vec<usize> = counts.iter().filter(|x| x.1 == c).map(|x| x.0.div_ceil(2)).collect();
            let row = stats.cycles[c as usize];
            prop_assert_eq!(row.frames, rows.len());
            prop_assert_eq!(row.instances, rows.iter().sum::<usize>());
            prop_assert_eq!(row.frames_with_instances, rows.iter().filter(|&&n| n > 0).count());
        }
        let t = stats.total();
        prop_assert_eq!(t.frames, counts.len());
        prop_assert_eq!(t.instances, counts.iter().map(|x| x.0.div_ceil(2)).sum::<usize>());
    }
}
