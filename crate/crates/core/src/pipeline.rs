//! Batch scoring: probability stack -> pixel score map -> image-level score,
//! parallel across frames.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{image_score, AggregationConfig};
use crate::error::{Error, Result};
use crate::model::{FrameRecord, Manifest, ManifestFrame, ProbabilityStack};
use crate::scoring::{score_stack, ScoreConfig, ScoreMap};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub score: ScoreConfig,
    pub aggregation: AggregationConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.aggregation.validate()
    }

    pub fn score_map(&self, stack: &ProbabilityStack) -> Result<ScoreMap> {
        score_stack(stack, &self.score)
    }

    pub fn image_score(&self, stack: &ProbabilityStack) -> Result<f64> {
        Ok(image_score(&self.score_map(stack)?, &self.aggregation))
    }
}

/// Maps `f` over `items` on a pool of `workers` threads (all cores when
/// `None`). Output order follows input order regardless of scheduling.
pub fn par_map<T, R, F>(workers: Option<usize>, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match workers {
        Some(1) => items.iter().map(f).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                items.par_iter().map(f).collect()
            }
        },
        None => items.par_iter().map(f).collect(),
    }
}

/// Source of image-level scores for the frames of the unlabeled pool.
///
/// Implementations stand in for the external detector: after each retraining
/// round they report fresh scores, so `cycle` is passed through.
pub trait FrameScorer: Sync {
    fn image_score(&self, frame: &FrameRecord, cycle: u32) -> Result<f64>;
}

/// Scores read from a fixed table.
#[derive(Clone, Debug, Default)]
pub struct PrecomputedScores(pub HashMap<String, f64>);

impl FrameScorer for PrecomputedScores {
    fn image_score(&self, frame: &FrameRecord, _cycle: u32) -> Result<f64> {
        self.0
            .get(&frame.frame_id)
            .copied()
            .ok_or_else(|| Error::MissingScore(frame.frame_id.clone()))
    }
}

/// Adapter for closures.
pub struct FnScorer<F>(pub F);

impl<F> FrameScorer for FnScorer<F>
where
    F: Fn(&FrameRecord, u32) -> Result<f64> + Sync,
{
    fn image_score(&self, frame: &FrameRecord, cycle: u32) -> Result<f64> {
        (self.0)(frame, cycle)
    }
}

/// Reads each frame's `.alpm` stack from the manifest and scores it.
pub struct ManifestScorer<'a> {
    manifest: &'a Manifest,
    index: HashMap<&'a str, &'a ManifestFrame>,
    config: PipelineConfig,
}

impl<'a> ManifestScorer<'a> {
    pub fn new(manifest: &'a Manifest, config: PipelineConfig) -> Self {
        let index = manifest.frames.iter().map(|f| (f.frame_id.as_str(), f)).collect();
        ManifestScorer {
            manifest,
            index,
            config,
        }
    }

    pub fn score_map(&self, frame_id: &str) -> Result<ScoreMap> {
        let entry = self
            .index
            .get(frame_id)
            .ok_or_else(|| Error::UnknownFrame(frame_id.to_string()))?;
        let stack = self.manifest.load_stack(entry)?;
        self.config.score_map(&stack)
    }
}

impl FrameScorer for ManifestScorer<'_> {
    fn image_score(&self, frame: &FrameRecord, _cycle: u32) -> Result<f64> {
        let map = self.score_map(&frame.frame_id)?;
        Ok(image_score(&map, &self.config.aggregation))
    }
}

/// Fills `score` on every frame using `scorer`, in parallel.
pub fn score_frames(
    frames: &mut [FrameRecord],
    scorer: &dyn FrameScorer,
    cycle: u32,
    workers: Option<usize>,
) -> Result<()> {
    let scores = par_map(workers, frames, |f| scorer.image_score(f, cycle));
    for (frame, z) in frames.iter_mut().zip(scores) {
        frame.score = Some(z?);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_order_independent_of_workers() {
        let items: Vec<u64> = (0..500).collect();
        let f = |x: &u64| x.wrapping_mul(2654435761) % 1000;
        let one = par_map(Some(1), &items, f);
        assert_eq!(one, par_map(Some(3), &items, f));
        assert_eq!(one, par_map(None, &items, f));
    }

    #[test]
    fn constant_stack_image_score_zero() {
        let stack = ProbabilityStack::filled("c", 40, 40, 2, 1, 0.2).unwrap();
        assert_eq!(PipelineConfig::default().image_score(&stack).unwrap(), 0.0);
    }

    #[test]
    fn precomputed_missing_frame() {
        let s = PrecomputedScores::default();
        assert!(matches!(
            s.image_score(&FrameRecord::still("x"), 0),
            Err(Error::MissingScore(_))
        ));
    }
}
