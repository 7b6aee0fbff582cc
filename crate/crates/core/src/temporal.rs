//! Temporal reasoning for video frames: Gaussian smoothing of image-level
//! scores and the per-cycle / permanent exclusion rules applied during
//! selection.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FrameRecord;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    /// Half window in frames.
    pub half_window: u32,
    pub sigma: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            half_window: 5,
            sigma: 2.5,
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "smoothing sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn weight(&self, offset: i64) -> f64 {
        let d = offset as f64;
        (-d * d / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Gaussian-weighted moving average over the frames of one video.
///
/// `scores` holds `(t, z)` pairs with strictly increasing `t`. Frames missing
/// from the sequence simply do not contribute; weights are renormalised over
/// the frames present in each window.
pub fn smooth(scores: &[(i64, f64)], cfg: &SmoothingConfig) -> Result<Vec<(i64, f64)>> {
    for pair in scores.windows(2) {
        let (a, b) = (pair[0].0, pair[1].0);
        if a == b {
            return Err(Error::DuplicateTemporalIndex {
                video: String::new(),
                t: a,
            });
        }
        if b < a {
            return Err(Error::UnorderedTemporalIndex {
                video: String::new(),
                t: b,
            });
        }
    }
    if cfg.half_window == 0 {
        return Ok(scores.to_vec());
    }
    let dt = cfg.half_window as i64;
    let mut out = Vec::with_capacity(scores.len());
    let mut lo = 0;
    for &(t, _) in scores {
        while scores[lo].0 < t - dt {
            lo += 1;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for &(ti, zi) in scores[lo..].iter().take_while(|(ti, _)| *ti <= t + dt) {
            let w = cfg.weight(ti - t);
            num += w * zi;
            den += w;
        }
        out.push((t, num / den));
    }
    Ok(out)
}

/// Fills `smoothed_score` for every scored video frame, video by video.
/// Still images are left untouched.
pub fn smooth_records(frames: &mut [FrameRecord], cfg: &SmoothingConfig) -> Result<()> {
    let mut by_video: HashMap<String, Vec<(i64, usize)>> = HashMap::new();
    for (i, f) in frames.iter().enumerate() {
        if let Some((v, t)) = f.video_position() {
            by_video.entry(v.to_string()).or_default().push((t, i));
        }
    }
    for (video, mut members) in by_video {
        members.sort_unstable();
        let series: Vec<(i64, f64)> = members
            .iter()
            .map(|&(t, i)| {
                frames[i]
                    .score
                    .map(|z| (t, z))
                    .ok_or_else(|| Error::MissingScore(frames[i].frame_id.clone()))
            })
            .collect::<Result<_>>()?;
        let smoothed = smooth(&series, cfg).map_err(|e| match e {
            Error::DuplicateTemporalIndex { t, .. } => Error::DuplicateTemporalIndex {
                video: video.clone(),
                t,
            },
            Error::UnorderedTemporalIndex { t, .. } => Error::UnorderedTemporalIndex {
                video: video.clone(),
                t,
            },
            other => other,
        })?;
        for (&(_, i), (_, z_hat)) in members.iter().zip(smoothed) {
            frames[i].smoothed_score = Some(z_hat);
        }
    }
    Ok(())
}

/// Exclusion radii around a selected video frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalRuleConfig {
    /// Frames within this distance are blocked for the rest of the cycle.
    pub dt1: u32,
    /// Frames within this distance are blocked for all later cycles.
    pub dt2: u32,
}

impl Default for TemporalRuleConfig {
    fn default() -> Self {
        TemporalRuleConfig { dt1: 15, dt2: 2 }
    }
}

impl TemporalRuleConfig {
    /// No exclusion beyond the selected frame itself.
    pub const NONE: TemporalRuleConfig = TemporalRuleConfig { dt1: 0, dt2: 0 };

    pub fn validate(&self) -> Result<()> {
        if self.dt1 < self.dt2 {
            return Err(Error::InvalidConfig(format!(
                "dt1 ({}) must be at least dt2 ({})",
                self.dt1, self.dt2
            )));
        }
        Ok(())
    }
}

/// Inclusive integer frame interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn around(t: i64, radius: u32) -> Self {
        Interval {
            lo: t - radius as i64,
            hi: t + radius as i64,
        }
    }

    pub fn contains(&self, t: i64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

/// Per-video exclusion intervals from past selections.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionLedger {
    permanent: BTreeMap<String, Vec<Interval>>,
    current_cycle: BTreeMap<String, Vec<Interval>>,
}

impl ExclusionLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.permanent.is_empty() && self.current_cycle.is_empty()
    }

    /// Still images are always selectable.
    pub fn is_selectable(&self, frame: &FrameRecord) -> bool {
        match frame.video_position() {
            None => true,
            Some((video, t)) => self.is_free(video, t),
        }
    }

    pub fn is_free(&self, video: &str, t: i64) -> bool {
        let blocked = |m: &BTreeMap<String, Vec<Interval>>| {
            m.get(video).is_some_and(|iv| iv.iter().any(|i| i.contains(t)))
        };
        !blocked(&self.permanent) && !blocked(&self.current_cycle)
    }

    pub fn record_selection(&mut self, frame: &FrameRecord, rules: &TemporalRuleConfig) {
        if let Some((video, t)) = frame.video_position() {
            self.current_cycle
                .entry(video.to_string())
                .or_default()
                .push(Interval::around(t, rules.dt1));
            self.permanent
                .entry(video.to_string())
                .or_default()
                .push(Interval::around(t, rules.dt2));
        }
    }

    pub fn advance_cycle(&mut self) {
        self.current_cycle.clear();
    }

    pub fn permanent_intervals(&self, video: &str) -> &[Interval] {
        self.permanent.get(video).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn cycle_intervals(&self, video: &str) -> &[Interval] {
        self.current_cycle.get(video).map(Vec::as_slice).unwrap_or(&[])
    }
}
