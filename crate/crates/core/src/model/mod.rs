//! Domain types: probability stacks, frames, annotations and branch geometry.

pub mod container;
pub mod manifest;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use container::{decode_stack, encode_stack, read_probability_stack, write_probability_stack};
pub use manifest::{Manifest, ManifestFrame};

/// Per-frame detector output: `branches * mc_samples` row-major `width x height`
/// probability matrices, stored branch-major and sample-minor.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityStack {
    pub frame_id: String,
    width: usize,
    height: usize,
    branches: usize,
    mc_samples: usize,
    data: Vec<f32>,
}

impl ProbabilityStack {
    pub fn new(
        frame_id: impl Into<String>,
        width: usize,
        height: usize,
        branches: usize,
        mc_samples: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!("empty matrix {width}x{height}")));
        }
        if branches == 0 || mc_samples == 0 {
            return Err(Error::DimensionMismatch(format!(
                "need at least one branch and one sample (got K={branches}, T={mc_samples})"
            )));
        }
        let expected = width * height * branches * mc_samples;
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} values for {width}x{height}x{branches}x{mc_samples}, got {}",
                data.len()
            )));
        }
        let stack = ProbabilityStack {
            frame_id: frame_id.into(),
            width,
            height,
            branches,
            mc_samples,
            data,
        };
        stack.validate_values()?;
        Ok(stack)
    }

    /// Every matrix filled with `value`.
    pub fn filled(
        frame_id: impl Into<String>,
        width: usize,
        height: usize,
        branches: usize,
        mc_samples: usize,
        value: f32,
    ) -> Result<Self> {
        let data = vec![value; width * height * branches * mc_samples];
        Self::new(frame_id, width, height, branches, mc_samples, data)
    }

    /// Builds a stack from individual matrices given in branch-major,
    /// sample-minor order. All matrices must have `width * height` entries.
    pub fn from_matrices(
        frame_id: impl Into<String>,
        width: usize,
        height: usize,
        mc_samples: usize,
        matrices: &[Vec<f32>],
    ) -> Result<Self> {
        if mc_samples == 0 || matrices.is_empty() || !matrices.len().is_multiple_of(mc_samples) {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices cannot be split into samples of {mc_samples}",
                matrices.len()
            )));
        }
        let mut data = Vec::with_capacity(width * height * matrices.len());
        for (i, m) in matrices.iter().enumerate() {
            if m.len() != width * height {
                return Err(Error::DimensionMismatch(format!(
                    "matrix {i} has {} values, expected {}",
                    m.len(),
                    width * height
                )));
            }
            data.extend_from_slice(m);
        }
        Self::new(
            frame_id,
            width,
            height,
            matrices.len() / mc_samples,
            mc_samples,
            data,
        )
    }

    fn validate_values(&self) -> Result<()> {
        let plane = self.width * self.height;
        for (idx, &p) in self.data.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                let matrix = idx / plane;
                let pixel = idx % plane;
                return Err(Error::ValueOutOfRange {
                    branch: matrix / self.mc_samples,
                    sample: matrix % self.mc_samples,
                    x: pixel % self.width,
                    y: pixel / self.width,
                    value: p,
                });
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn branches(&self) -> usize {
        self.branches
    }

    pub fn mc_samples(&self) -> usize {
        self.mc_samples
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn matrix(&self, branch: usize, sample: usize) -> &[f32] {
        let plane = self.width * self.height;
        let start = (branch * self.mc_samples + sample) * plane;
        &self.data[start..start + plane]
    }

    /// Per-pixel mean over the MC samples of one branch, in f64.
    pub fn branch_mean(&self, branch: usize) -> Vec<f64> {
        let plane = self.width * self.height;
        let mut acc = vec![0.0f64; plane];
        for sample in 0..self.mc_samples {
            for (a, &p) in acc.iter_mut().zip(self.matrix(branch, sample)) {
                *a += p as f64;
            }
        }
        if self.mc_samples > 1 {
            let n = self.mc_samples as f64;
            acc.iter_mut().for_each(|a| *a /= n);
        }
        acc
    }

    /// Average of each matrix with its horizontal mirror image, emulating a
    /// detector evaluated on both the frame and its flipped copy.
    pub fn mirror_averaged(&self) -> ProbabilityStack {
        let w = self.width;
        let mut data = self.data.clone();
        for (dst, src) in data.chunks_exact_mut(w).zip(self.data.chunks_exact(w)) {
            for x in 0..w {
                dst[x] = 0.5 * (src[x] + src[w - 1 - x]);
            }
        }
        ProbabilityStack {
            frame_id: self.frame_id.clone(),
            data,
            ..*self
        }
    }
}

/// Axis-aligned annotation box in pixel coordinates (top-left origin).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default = "default_class")]
    pub class_label: String,
}

fn default_class() -> String {
    "pedestrian".to_string()
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64, class_label: impl Into<String>) -> Result<Self> {
        let b = BoundingBox {
            x,
            y,
            w,
            h,
            class_label: class_label.into(),
        };
        b.validate(None)?;
        Ok(b)
    }

    /// Checks `w > 0`, `h > 0` and, when frame dimensions are known, that the
    /// box lies inside the frame.
    pub fn validate(&self, frame: Option<(usize, usize)>) -> Result<()> {
        if !(self.w > 0.0 && self.h > 0.0) {
            return Err(Error::InvalidManifest(format!(
                "box at ({}, {}) has non-positive size {}x{}",
                self.x, self.y, self.w, self.h
            )));
        }
        if let Some((fw, fh)) = frame {
            if self.x < 0.0 || self.y < 0.0 || self.x + self.w > fw as f64 || self.y + self.h > fh as f64 {
                return Err(Error::InvalidManifest(format!(
                    "box ({}, {}, {}x{}) exceeds frame {fw}x{fh}",
                    self.x, self.y, self.w, self.h
                )));
            }
        }
        Ok(())
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.w / self.h
    }
}

/// Default box size covered by one prediction branch (1-based index).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub branch_index: usize,
    pub box_height: f64,
    pub box_width: f64,
}

impl BranchSpec {
    pub fn new(branch_index: usize, box_height: f64, box_width: f64) -> Self {
        BranchSpec {
            branch_index,
            box_height,
            box_width,
        }
    }
}

/// The five-branch pedestrian layout, largest boxes first (height x width).
pub fn default_branch_specs() -> Vec<BranchSpec> {
    [
        (270.0, 160.0),
        (225.0, 130.0),
        (145.0, 80.0),
        (80.0, 50.0),
        (55.0, 31.0),
    ]
    .iter()
    .enumerate()
    .map(|(i, &(h, w))| BranchSpec::new(i + 1, h, w))
    .collect()
}

/// Branch indices must be distinct and cover `1..=n`.
pub fn validate_branch_specs(specs: &[BranchSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::InvalidConfig("no branch specs".into()));
    }
    let mut idx: Vec<usize> = specs.iter().map(|s| s.branch_index).collect();
    idx.sort_unstable();
    if idx.iter().enumerate().any(|(i, &k)| k != i + 1) {
        return Err(Error::InvalidConfig(format!(
            "branch indices must be contiguous from 1, got {idx:?}"
        )));
    }
    if specs.iter().any(|s| !(s.box_height > 0.0 && s.box_width > 0.0)) {
        return Err(Error::InvalidConfig("branch box sizes must be positive".into()));
    }
    Ok(())
}

/// One frame of the dataset together with its scores once computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_index: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothed_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<Vec<BoundingBox>>,
}

impl FrameRecord {
    pub fn still(frame_id: impl Into<String>) -> Self {
        FrameRecord {
            frame_id: frame_id.into(),
            video_id: None,
            temporal_index: None,
            score: None,
            smoothed_score: None,
            annotations: None,
        }
    }

    pub fn video(frame_id: impl Into<String>, video_id: impl Into<String>, t: i64) -> Self {
        FrameRecord {
            video_id: Some(video_id.into()),
            temporal_index: Some(t),
            ..Self::still(frame_id)
        }
    }

    pub fn with_score(mut self, z: f64) -> Self {
        self.score = Some(z);
        self
    }

    /// `(video_id, t)` for video frames, `None` for still images.
    pub fn video_position(&self) -> Option<(&str, i64)> {
        match (&self.video_id, self.temporal_index) {
            (Some(v), Some(t)) => Some((v.as_str(), t)),
            _ => None,
        }
    }

    /// Score used for ranking: the smoothed score when present.
    pub fn ranking_score(&self) -> Option<f64> {
        self.smoothed_score.or(self.score)
    }
}

/// Keeps boxes at least `min_height` tall whose width/height ratio lies in
/// `[ratio_lo, ratio_hi]`, preserving order.
pub fn filter_annotations(
    boxes: &[BoundingBox],
    min_height: f64,
    ratio_lo: f64,
    ratio_hi: f64,
) -> Vec<BoundingBox> {
    debug_assert!(ratio_lo < ratio_hi);
    boxes
        .iter()
        .filter(|b| {
            let ratio = b.aspect_ratio();
            b.h >= min_height && ratio >= ratio_lo && ratio <= ratio_hi
        })
        .cloned()
        .collect()
}

/// Branch whose default (height, width) is nearest to the box in Euclidean
/// distance; ties go to the smaller branch index.
pub fn map_box_to_branch(b: &BoundingBox, specs: &[BranchSpec]) -> usize {
    assert!(!specs.is_empty(), "map_box_to_branch needs at least one spec");
    let dist2 = |s: &BranchSpec| {
        let dh = b.h - s.box_height;
        let dw = b.w - s.box_width;
        dh * dh + dw * dw
    };
    specs
        .iter()
        .min_by(|a, c| {
            dist2(a)
                .total_cmp(&dist2(c))
                .then(a.branch_index.cmp(&c.branch_index))
        })
        .map(|s| s.branch_index)
        .unwrap()
}
