//! `.alpm` probability-map container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ALPM"
//! 4       4     version (u32, currently 1)
//! 8       4     width W (u32)
//! 12      4     height H (u32)
//! 16      4     branches K (u32)
//! 20      4     MC samples T (u32)
//! 24      4*W*H*K*T  f32 values, K*T row-major matrices, branch-major then sample
//! ```
//!
//! The frame id is not stored; readers take it from the file stem.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ProbabilityStack;

pub const MAGIC: &[u8; 4] = b"ALPM";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

pub fn encode_stack(stack: &ProbabilityStack) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * stack.data().len());
    out.extend_from_slice(MAGIC);
    for v in [
        VERSION,
        stack.width() as u32,
        stack.height() as u32,
        stack.branches() as u32,
        stack.mc_samples() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for p in stack.data() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_stack(bytes: &[u8], frame_id: &str) -> Result<ProbabilityStack> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::MalformedHeader(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&bytes[0..4])
        )));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let version = word(1);
    if version != VERSION {
        return Err(Error::MalformedHeader(format!("unsupported version {version}")));
    }
    let (w, h, k, t) = (
        word(2) as usize,
        word(3) as usize,
        word(4) as usize,
        word(5) as usize,
    );
    let count = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(k))
        .and_then(|n| n.checked_mul(t))
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != count * 4 {
        return Err(Error::DimensionMismatch(format!(
            "header declares {w}x{h}, K={k}, T={t} ({count} values) but payload holds {} bytes",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ProbabilityStack::new(frame_id, w, h, k, t, data)
}

pub fn read_probability_stack(path: impl AsRef<Path>) -> Result<ProbabilityStack> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let frame_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_stack(&bytes, &frame_id)
}

pub fn write_probability_stack(stack: &ProbabilityStack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_stack(stack)).map_err(|e| Error::io(path, e))
}
