//! Active-learning frame selection driven by detector probability maps.
//!
//! The crate scores unlabeled frames from per-pixel detection probabilities,
//! collapses pixel scores into image-level scores, smooths them over time for
//! video, and runs budgeted selection cycles. Detector retraining stays
//! outside: each cycle emits the labeled frame list for an external trainer.
//!
//! Module map:
//! - [`model`]: probability stacks, frames, annotations, `.alpm` container, manifests
//! - [`scoring`]: pixel-level score functions with summed-area-table windows
//! - [`aggregate`]: image-level aggregation
//! - [`temporal`]: score smoothing and temporal exclusion rules
//! - [`selection`], [`pool`], [`budget`], [`stats`]: the selection engine
//! - [`pipeline`]: batch scoring across frames
//! - [`synth`]: synthetic worlds and the simulation harness

pub mod aggregate;
pub mod budget;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod pool;
pub mod scoring;
pub mod selection;
pub mod stats;
pub mod synth;
pub mod temporal;

pub use error::{Error, Result};
