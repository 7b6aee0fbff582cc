//! JSON dataset manifest.
//!
//! ```json
//! {
//!   "version": 1,
//!   "width": 640,
//!   "height": 480,
//!   "branches": [{"branch_index": 1, "box_height": 270.0, "box_width": 160.0}],
//!   "frames": [
//!     {"frame_id": "set00_v000_0030", "video_id": "set00_v000", "temporal_index": 30,
//!      "stack": "stacks/set00_v000_0030.alpm",
//!      "annotations": [{"x": 10, "y": 20, "w": 30, "h": 80, "class_label": "pedestrian"}]}
//!   ]
//! }
//! ```
//!
//! `width`, `height`, `branches`, `video_id`/`temporal_index`, `stack` and
//! `annotations` are optional. Relative stack paths resolve against the
//! manifest's directory.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{read_probability_stack, BoundingBox, BranchSpec, FrameRecord, ProbabilityStack};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFrame {
    pub frame_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_index: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<Vec<BoundingBox>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<BranchSpec>>,
    pub frames: Vec<ManifestFrame>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Manifest {
    pub fn new(frames: Vec<ManifestFrame>) -> Self {
        Manifest {
            version: MANIFEST_VERSION,
            width: None,
            height: None,
            branches: None,
            frames,
            base_dir: PathBuf::new(),
        }
    }

    pub fn from_records(records: &[FrameRecord]) -> Self {
        Self::new(
            records
                .iter()
                .map(|r| ManifestFrame {
                    frame_id: r.frame_id.clone(),
                    video_id: r.video_id.clone(),
                    temporal_index: r.temporal_index,
                    stack: None,
                    annotations: r.annotations.clone(),
                })
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| Error::json(path.display().to_string(), e))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn set_base_dir(&mut self, dir: impl Into<PathBuf>) {
        self.base_dir = dir.into();
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::InvalidManifest(format!(
                "unsupported manifest version {}",
                self.version
            )));
        }
        if let Some(specs) = &self.branches {
            crate::model::validate_branch_specs(specs)?;
        }
        let frame_dims = self.width.zip(self.height);
        let mut ids = HashSet::new();
        let mut positions: HashMap<&str, BTreeSet<i64>> = HashMap::new();
        for f in &self.frames {
            if !ids.insert(f.frame_id.as_str()) {
                return Err(Error::InvalidManifest(format!(
                    "duplicate frame_id {}",
                    f.frame_id
                )));
            }
            match (&f.video_id, f.temporal_index) {
                (Some(v), Some(t)) => {
                    if !positions.entry(v).or_default().insert(t) {
                        return Err(Error::DuplicateTemporalIndex { video: v.clone(), t });
                    }
                }
                (None, None) => {}
                _ => {
                    return Err(Error::InvalidManifest(format!(
                        "frame {} must set both video_id and temporal_index or neither",
                        f.frame_id
                    )))
                }
            }
            for b in f.annotations.iter().flatten() {
                b.validate(frame_dims)
                    .map_err(|e| Error::InvalidManifest(format!("frame {}: {e}", f.frame_id)))?;
            }
        }
        Ok(())
    }

    pub fn records(&self) -> Vec<FrameRecord> {
        self.frames
            .iter()
            .map(|f| FrameRecord {
                frame_id: f.frame_id.clone(),
                video_id: f.video_id.clone(),
                temporal_index: f.temporal_index,
                score: None,
                smoothed_score: None,
                annotations: f.annotations.clone(),
            })
            .collect()
    }

    pub fn has_video(&self) -> bool {
        self.frames.iter().any(|f| f.video_id.is_some())
    }

    pub fn stack_path(&self, frame: &ManifestFrame) -> Option<PathBuf> {
        frame.stack.as_ref().map(|p| {
            if p.is_absolute() {
                p.clone()
            } else {
                self.base_dir.join(p)
            }
        })
    }

    /// Reads the frame's probability stack; the returned stack carries the
    /// manifest's frame id.
    pub fn load_stack(&self, frame: &ManifestFrame) -> Result<ProbabilityStack> {
        let path = self
            .stack_path(frame)
            .ok_or_else(|| Error::InvalidManifest(format!("frame {} has no stack path", frame.frame_id)))?;
        let mut stack = read_probability_stack(&path)?;
        stack.frame_id = frame.frame_id.clone();
        Ok(stack)
    }
}
