//! Pixel-level score functions.
//!
//! Three methods are supported, all in nats and all summed over prediction
//! branches:
//!
//! * `Proposed`: spatial divergence. For each pixel the entropy of the
//!   windowed mean probability minus the windowed mean of per-pixel entropies.
//!   Non-negative by concavity of the binary entropy, zero on locally constant
//!   maps.
//! * `Entropy`: per-pixel binary entropy, no window.
//! * `McDropout`: the same divergence taken across MC samples at a fixed pixel.
//!
//! Window means use two summed-area tables per branch (probabilities and their
//! entropies), so cost is independent of the radius.

pub mod integral;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProbabilityStack;
use integral::{clip_window, SummedAreaTable};

pub const DEFAULT_RADIUS: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMethod {
    Proposed,
    Entropy,
    McDropout,
}

/// How window means are normalised near image borders.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BorderMode {
    /// Divide by the number of in-bounds pixels.
    #[default]
    ActualCount,
    /// Divide by `(2r+1)^2`; out-of-bounds pixels contribute nothing.
    FixedDenominator,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub method: ScoreMethod,
    pub radius: usize,
    pub border_mode: BorderMode,
    /// Average each matrix with its horizontal mirror before scoring.
    pub mirror_average: bool,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            method: ScoreMethod::Proposed,
            radius: DEFAULT_RADIUS,
            border_mode: BorderMode::ActualCount,
            mirror_average: false,
        }
    }
}

impl ScoreConfig {
    pub fn with_method(method: ScoreMethod) -> Self {
        ScoreConfig {
            method,
            ..Default::default()
        }
    }
}

/// Non-negative per-pixel scores in nats, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMap {
    pub frame_id: String,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ScoreMap {
    pub fn new(frame_id: impl Into<String>, width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height, "score map size mismatch");
        ScoreMap {
            frame_id: frame_id.into(),
            width,
            height,
            values,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Scores rescaled into `[0,1]` by `scale`, as a single-branch stack for
    /// inspection with the `.alpm` tooling.
    pub fn to_stack(&self, scale: f64) -> Result<ProbabilityStack> {
        let data = self
            .values
            .iter()
            .map(|&v| {
                if scale > 0.0 {
                    (v / scale).clamp(0.0, 1.0) as f32
                } else {
                    0.0
                }
            })
            .collect();
        ProbabilityStack::new(self.frame_id.clone(), self.width, self.height, 1, 1, data)
    }
}

/// Binary entropy in nats with `0 ln 0 = 0`.
pub fn binary_entropy(z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::InvalidProbability(z));
    }
    Ok(entropy_clamped(z))
}

/// Binary entropy after clamping into `[0,1]`; absorbs rounding drift from
/// window sums.
#[inline]
pub(crate) fn entropy_clamped(z: f64) -> f64 {
    let z = z.clamp(0.0, 1.0);
    let mut h = 0.0;
    if z > 0.0 {
        h -= z * z.ln();
    }
    if z < 1.0 {
        h -= (1.0 - z) * (1.0 - z).ln();
    }
    h
}

/// Mean of the `(2r+1)^2` window centred on `(x, y)` by direct summation.
pub fn spatial_mean(
    values: &[f64],
    width: usize,
    height: usize,
    x: usize,
    y: usize,
    radius: usize,
    border: BorderMode,
) -> f64 {
    let (x0, x1) = clip_window(x, radius, width);
    let (y0, y1) = clip_window(y, radius, height);
    let mut sum = 0.0;
    for yy in y0..=y1 {
        sum += values[yy * width + x0..=yy * width + x1].iter().sum::<f64>();
    }
    sum / window_denominator(x0, x1, y0, y1, radius, border)
}

#[inline]
fn window_denominator(x0: usize, x1: usize, y0: usize, y1: usize, radius: usize, border: BorderMode) -> f64 {
    match border {
        BorderMode::ActualCount => ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64,
        BorderMode::FixedDenominator => ((2 * radius + 1) * (2 * radius + 1)) as f64,
    }
}

/// Unclamped spatial-divergence score of one probability matrix.
pub fn proposed_branch_raw(
    probs: &[f64],
    width: usize,
    height: usize,
    radius: usize,
    border: BorderMode,
) -> Vec<f64> {
    let entropies: Vec<f64> = probs.iter().map(|&p| entropy_clamped(p)).collect();
    let p_sat = SummedAreaTable::new(probs, width, height);
    let h_sat = SummedAreaTable::new(&entropies, width, height);
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let (y0, y1) = clip_window(y, radius, height);
        for x in 0..width {
            let (x0, x1) = clip_window(x, radius, width);
            let denom = window_denominator(x0, x1, y0, y1, radius, border);
            let mean_p = p_sat.sum(x0, y0, x1, y1) / denom;
            let mean_h = h_sat.sum(x0, y0, x1, y1) / denom;
            out.push(entropy_clamped(mean_p) - mean_h);
        }
    }
    out
}

/// Raw branch scores at or below this are rounding residue and become 0.
pub const ZERO_SNAP: f64 = 1e-12;

fn accumulate_clamped(acc: &mut [f64], branch: &[f64]) {
    for (a, &s) in acc.iter_mut().zip(branch) {
        if s > ZERO_SNAP {
            *a += s;
        }
    }
}

fn prepared<'a>(stack: &'a ProbabilityStack, cfg: &ScoreConfig) -> std::borrow::Cow<'a, ProbabilityStack> {
    if cfg.mirror_average {
        std::borrow::Cow::Owned(stack.mirror_averaged())
    } else {
        std::borrow::Cow::Borrowed(stack)
    }
}

/// Spatial-divergence score summed over branches. Stacks carrying several MC
/// samples are first averaged per branch.
pub fn pixel_score_proposed(stack: &ProbabilityStack, cfg: &ScoreConfig) -> ScoreMap {
    let stack = prepared(stack, cfg);
    let (w, h) = (stack.width(), stack.height());
    let mut acc = vec![0.0f64; w * h];
    for k in 0..stack.branches() {
        let probs = stack.branch_mean(k);
        // A constant matrix has zero divergence everywhere under actual-count
        // normalisation.
        if cfg.border_mode == BorderMode::ActualCount && probs.iter().all(|&p| p == probs[0]) {
            continue;
        }
        let branch = proposed_branch_raw(&probs, w, h, cfg.radius, cfg.border_mode);
        accumulate_clamped(&mut acc, &branch);
    }
    ScoreMap::new(stack.frame_id.clone(), w, h, acc)
}

/// Per-pixel binary entropy summed over branches.
pub fn pixel_score_entropy(stack: &ProbabilityStack, cfg: &ScoreConfig) -> ScoreMap {
    let stack = prepared(stack, cfg);
    let (w, h) = (stack.width(), stack.height());
    let mut acc = vec![0.0f64; w * h];
    for k in 0..stack.branches() {
        for (a, p) in acc.iter_mut().zip(stack.branch_mean(k)) {
            *a += entropy_clamped(p);
        }
    }
    ScoreMap::new(stack.frame_id.clone(), w, h, acc)
}

/// Disagreement across MC samples at each pixel: entropy of the sample mean
/// minus the mean of sample entropies, summed over branches.
pub fn pixel_score_mc_dropout(stack: &ProbabilityStack, cfg: &ScoreConfig) -> Result<ScoreMap> {
    let samples = stack.mc_samples();
    if samples < 2 {
        return Err(Error::InvalidConfig(format!(
            "mc-dropout scoring needs at least 2 MC samples, stack {} has {samples}",
            stack.frame_id
        )));
    }
    let stack = prepared(stack, cfg);
    let (w, h) = (stack.width(), stack.height());
    let n = samples as f64;
    let mut acc = vec![0.0f64; w * h];
    let mut mean_h = vec![0.0f64; w * h];
    for k in 0..stack.branches() {
        let mean_p = stack.branch_mean(k);
        mean_h.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..samples {
            for (m, &p) in mean_h.iter_mut().zip(stack.matrix(k, t)) {
                *m += entropy_clamped(p as f64);
            }
        }
        let branch: Vec<f64> = mean_p
            .iter()
            .zip(&mean_h)
            .map(|(&p, &hsum)| entropy_clamped(p) - hsum / n)
            .collect();
        accumulate_clamped(&mut acc, &branch);
    }
    Ok(ScoreMap::new(stack.frame_id.clone(), w, h, acc))
}

/// Dispatches on `cfg.method`.
pub fn score_stack(stack: &ProbabilityStack, cfg: &ScoreConfig) -> Result<ScoreMap> {
    match cfg.method {
        ScoreMethod::Proposed => Ok(pixel_score_proposed(stack, cfg)),
        ScoreMethod::Entropy => Ok(pixel_score_entropy(stack, cfg)),
        ScoreMethod::McDropout => pixel_score_mc_dropout(stack, cfg),
    }
}

/// Largest value a summed score can take for `branches` binary branches.
pub fn max_score(branches: usize) -> f64 {
    branches as f64 * LN_2
}
