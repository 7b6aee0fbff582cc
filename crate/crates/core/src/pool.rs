//! Persistent pool state and the active-learning cycle.
//!
//! One cycle: score the unlabeled pool, aggregate, smooth video scores,
//! select `b` frames, move them to the labeled set and close the cycle in the
//! exclusion ledger. Retraining happens outside: the caller hands the
//! training manifest to the detector and provides fresh scores next cycle.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::budget::BudgetPlan;
use crate::error::{Error, Result};
use crate::model::FrameRecord;
use crate::pipeline::{score_frames, FrameScorer};
use crate::selection::{rank_and_select, select_guided_random, Scenario, Strategy};
use crate::temporal::{smooth_records, ExclusionLedger, SmoothingConfig, TemporalRuleConfig};

pub const POOL_FORMAT: &str = "framesel-pool";
pub const POOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledFrame {
    pub cycle: u32,
    pub frame_id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolState {
    pub unlabeled: BTreeSet<String>,
    pub labeled: Vec<LabeledFrame>,
    pub ledger: ExclusionLedger,
    pub cycle_index: u32,
    pub rng_seed: u64,
    /// Manifest the pool was created from, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
}

impl PoolState {
    pub fn new<I, S>(frame_ids: I, rng_seed: u64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PoolState {
            unlabeled: frame_ids.into_iter().map(Into::into).collect(),
            labeled: Vec::new(),
            ledger: ExclusionLedger::new(),
            cycle_index: 0,
            rng_seed,
            manifest: None,
        }
    }

    pub fn total(&self) -> usize {
        self.unlabeled.len() + self.labeled.len()
    }

    pub fn selected_in_cycle(&self, cycle: u32) -> impl Iterator<Item = &str> {
        self.labeled
            .iter()
            .filter(move |l| l.cycle == cycle)
            .map(|l| l.frame_id.as_str())
    }

    /// Seed for the guided-random shuffle of the current cycle.
    pub fn cycle_seed(&self) -> u64 {
        splitmix64(self.rng_seed ^ splitmix64(self.cycle_index as u64))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let state = serde_json::to_value(self).map_err(|e| Error::json("pool state", e))?;
        let envelope = Envelope {
            format: POOL_FORMAT.to_string(),
            version: POOL_VERSION,
            checksum: checksum(&state),
            state,
        };
        let mut text = serde_json::to_string_pretty(&envelope).map_err(|e| Error::json("pool state", e))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let envelope: Envelope = serde_json::from_str(&text)
            .map_err(|e| Error::CorruptState(format!("{}: {e}", path.display())))?;
        if envelope.format != POOL_FORMAT {
            return Err(Error::CorruptState(format!(
                "unexpected format tag {:?}",
                envelope.format
            )));
        }
        if envelope.version != POOL_VERSION {
            return Err(Error::VersionMismatch {
                found: envelope.version,
                expected: POOL_VERSION,
            });
        }
        let actual = checksum(&envelope.state);
        if actual != envelope.checksum {
            return Err(Error::CorruptState(format!(
                "checksum mismatch (stored {}, computed {actual})",
                envelope.checksum
            )));
        }
        let pool: PoolState =
            serde_json::from_value(envelope.state).map_err(|e| Error::CorruptState(e.to_string()))?;
        pool.check_invariants()?;
        Ok(pool)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for l in &self.labeled {
            if self.unlabeled.contains(&l.frame_id) || !seen.insert(l.frame_id.as_str()) {
                return Err(Error::CorruptState(format!(
                    "frame {} appears twice across labeled/unlabeled sets",
                    l.frame_id
                )));
            }
            if l.cycle >= self.cycle_index {
                return Err(Error::CorruptState(format!(
                    "frame {} labeled in cycle {} but only {} cycles completed",
                    l.frame_id, l.cycle, self.cycle_index
                )));
            }
        }
        Ok(())
    }

    /// Writes the retraining hand-off: the full labeled set after the last
    /// completed cycle.
    pub fn write_training_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = TrainingManifest {
            cycle: self.cycle_index,
            initialization: "pretrained".to_string(),
            frames: self.labeled.iter().map(|l| l.frame_id.clone()).collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::json("training manifest", e))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    checksum: String,
    state: serde_json::Value,
}

// serde_json maps are key-sorted, so the compact rendering is canonical.
fn checksum(state: &serde_json::Value) -> String {
    let canonical = state.to_string();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Frame list handed to the external detector for retraining.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub cycle: u32,
    pub initialization: String,
    pub frames: Vec<String>,
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleOptions {
    pub strategy: Strategy,
    pub scenario: Scenario,
    /// `None` disables the temporal exclusion rules.
    pub rules: Option<TemporalRuleConfig>,
    /// `None` disables temporal smoothing.
    pub smoothing: Option<SmoothingConfig>,
    pub workers: Option<usize>,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            strategy: Strategy::Proposed,
            scenario: Scenario::Video,
            rules: Some(TemporalRuleConfig::default()),
            smoothing: Some(SmoothingConfig::default()),
            workers: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl ScoreStats {
    fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        let mut stats = ScoreStats {
            count: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            mean: 0.0,
        };
        let mut sum = 0.0;
        for v in values {
            stats.count += 1;
            stats.min = stats.min.min(v);
            stats.max = stats.max.max(v);
            sum += v;
        }
        (stats.count > 0).then(|| ScoreStats {
            mean: sum / stats.count as f64,
            ..stats
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: u32,
    pub selected: Vec<String>,
    pub exhausted: bool,
    pub unlabeled_before: usize,
    pub unlabeled_after: usize,
    pub labeled_after: usize,
    /// Image-level score statistics over the scored pool; absent for guided random.
    pub scores: Option<ScoreStats>,
    /// Annotated instances in the selected frames, when annotations are known.
    pub instances: Option<usize>,
}

/// Runs one cycle over the frames of `catalog` that are still unlabeled.
pub fn run_cycle(
    pool: &mut PoolState,
    catalog: &[FrameRecord],
    scorer: &dyn FrameScorer,
    plan: &BudgetPlan,
    opts: &CycleOptions,
) -> Result<CycleReport> {
    let total_cycles = plan.cycles() as u32;
    if pool.cycle_index >= total_cycles {
        return Err(Error::BudgetExhausted {
            completed: pool.cycle_index,
            total: total_cycles,
        });
    }
    let cycle = pool.cycle_index;

    let by_id: HashMap<&str, &FrameRecord> = catalog.iter().map(|f| (f.frame_id.as_str(), f)).collect();
    let mut candidates: Vec<FrameRecord> = pool
        .unlabeled
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .map(|f| FrameRecord {
                    score: None,
                    smoothed_score: None,
                    ..(*f).clone()
                })
                .ok_or_else(|| Error::UnknownFrame(id.clone()))
        })
        .collect::<Result<_>>()?;

    let seed = pool.cycle_seed();
    let mut scratch_ledger = ExclusionLedger::new();
    let (ledger, rules) = match opts.rules {
        Some(r) => (&mut pool.ledger, r),
        None => (&mut scratch_ledger, TemporalRuleConfig::NONE),
    };

    let b = plan.per_cycle();
    let (outcome, stats) = match opts.strategy {
        Strategy::GuidedRandom => {
            let out = select_guided_random(&candidates, b, ledger, &rules, opts.scenario, seed);
            (out, None)
        }
        _ => {
            score_frames(&mut candidates, scorer, cycle, opts.workers)?;
            if let (Scenario::Video, Some(smoothing)) = (opts.scenario, opts.smoothing) {
                smooth_records(&mut candidates, &smoothing)?;
            }
            let stats = ScoreStats::of(candidates.iter().filter_map(|f| f.score));
            let out = rank_and_select(&candidates, b, ledger, &rules, opts.scenario)?;
            (out, stats)
        }
    };

    let unlabeled_before = pool.unlabeled.len();
    for id in &outcome.selected {
        pool.unlabeled.remove(id);
        pool.labeled.push(LabeledFrame {
            cycle,
            frame_id: id.clone(),
        });
    }
    pool.ledger.advance_cycle();
    pool.cycle_index += 1;

    let annotated: Vec<usize> = outcome
        .selected
        .iter()
        .filter_map(|id| by_id[id.as_str()].annotations.as_ref().map(Vec::len))
        .collect();
    let instances = (!annotated.is_empty()).then(|| annotated.iter().sum());

    Ok(CycleReport {
        cycle,
        exhausted: outcome.exhausted,
        unlabeled_before,
        unlabeled_after: pool.unlabeled.len(),
        labeled_after: pool.labeled.len(),
        selected: outcome.selected,
        scores: stats,
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::PrecomputedScores;

    fn catalog(n: usize) -> Vec<FrameRecord> {
        (0..n)
            .map(|i| FrameRecord::video(format!("f{i:04}"), format!("v{}", i / 50), (i % 50) as i64))
            .collect()
    }

    fn scores(frames: &[FrameRecord]) -> PrecomputedScores {
        PrecomputedScores(
            frames
                .iter()
                .enumerate()
                .map(|(i, f)| (f.frame_id.clone(), ((i * 37) % 101) as f64 / 101.0))
                .collect(),
        )
    }

    #[test]
    fn fresh_pool() {
        let pool = PoolState::new(["a", "b"], 1);
        assert_eq!(pool.cycle_index, 0);
        assert!(pool.labeled.is_empty());
        assert_eq!(pool.total(), 2);
    }

    #[test]
    fn cycles_transfer_frames() {
        let frames = catalog(400);
        let scorer = scores(&frames);
        let plan = BudgetPlan::new(60, 20).unwrap();
        let mut pool = PoolState::new(frames.iter().map(|f| f.frame_id.clone()), 5);
        for c in 0..3 {
            let before = pool.unlabeled.len();
            let report = run_cycle(&mut pool, &frames, &scorer, &plan, &CycleOptions::default()).unwrap();
            assert_eq!(report.cycle, c);
            assert!(!report.selected.is_empty());
            assert_eq!(report.exhausted, report.selected.len() < 20);
            assert_eq!(pool.unlabeled.len(), before - report.selected.len());
            assert_eq!(pool.selected_in_cycle(c).count(), report.selected.len());
            assert_eq!(pool.total(), 400);
            assert!(pool.check_invariants().is_ok());
        }
        let err = run_cycle(&mut pool, &frames, &scorer, &plan, &CycleOptions::default());
        assert!(matches!(err, Err(Error::BudgetExhausted { .. })));
    }

    #[test]
    fn missing_scores_fail_the_cycle() {
        let frames = catalog(10);
        let plan = BudgetPlan::new(2, 2).unwrap();
        let mut pool = PoolState::new(frames.iter().map(|f| f.frame_id.clone()), 0);
        let err = run_cycle(
            &mut pool,
            &frames,
            &PrecomputedScores::default(),
            &plan,
            &CycleOptions::default(),
        );
        assert!(matches!(err, Err(Error::MissingScore(_))));
        assert_eq!(pool.cycle_index, 0);
    }

    #[test]
    fn guided_random_cycles_are_reproducible() {
        let frames = catalog(300);
        let plan = BudgetPlan::new(40, 10).unwrap();
        let opts = CycleOptions {
            strategy: Strategy::GuidedRandom,
            ..Default::default()
        };
        let run = || {
            let mut pool = PoolState::new(frames.iter().map(|f| f.frame_id.clone()), 99);
            for _ in 0..4 {
                run_cycle(&mut pool, &frames, &PrecomputedScores::default(), &plan, &opts).unwrap();
            }
            pool.labeled
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn save_load_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.state");
        let frames = catalog(100);
        let mut pool = PoolState::new(frames.iter().map(|f| f.frame_id.clone()), 3);
        run_cycle(
            &mut pool,
            &frames,
            &scores(&frames),
            &BudgetPlan::new(10, 10).unwrap(),
            &CycleOptions::default(),
        )
        .unwrap();
        pool.save(&path).unwrap();
        assert_eq!(PoolState::load(&path).unwrap(), pool);

        let text = fs::read_to_string(&path).unwrap();
        let tampered = text.replacen("\"cycle_index\": 1", "\"cycle_index\": 2", 1);
        assert_ne!(tampered, text);
        fs::write(&path, tampered).unwrap();
        assert!(matches!(PoolState::load(&path), Err(Error::CorruptState(_))));

        let bumped = text.replacen("\"version\": 1", "\"version\": 9", 1);
        fs::write(&path, bumped).unwrap();
        assert!(matches!(
            PoolState::load(&path),
            Err(Error::VersionMismatch { .. })
        ));

        fs::write(&path, "not json").unwrap();
        assert!(matches!(PoolState::load(&path), Err(Error::CorruptState(_))));
    }

    #[test]
    fn training_manifest_lists_labeled() {
        let dir = tempfile::tempdir().unwrap();
        let mut pool = PoolState::new(["a", "b", "c"], 0);
        pool.unlabeled.remove("b");
        pool.labeled.push(LabeledFrame {
            cycle: 0,
            frame_id: "b".into(),
        });
        pool.cycle_index = 1;
        let path = dir.path().join("train.json");
        pool.write_training_manifest(&path).unwrap();
        let doc: TrainingManifest = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(doc.frames, vec!["b"]);
        assert_eq!(doc.cycle, 1);
    }
}
