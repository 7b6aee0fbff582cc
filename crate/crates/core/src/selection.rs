//! Ranking and top-b selection with temporal rule enforcement.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FrameRecord;
use crate::scoring::ScoreMethod;
use crate::temporal::{ExclusionLedger, TemporalRuleConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Independent images: plain top-b.
    Still,
    /// Video frames: one-by-one selection under the temporal rules.
    Video,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Proposed,
    Entropy,
    McDropout,
    GuidedRandom,
}

impl Strategy {
    /// Score function backing the strategy; `None` for guided random.
    pub fn score_method(self) -> Option<ScoreMethod> {
        match self {
            Strategy::Proposed => Some(ScoreMethod::Proposed),
            Strategy::Entropy => Some(ScoreMethod::Entropy),
            Strategy::McDropout => Some(ScoreMethod::McDropout),
            Strategy::GuidedRandom => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    /// Accepted frame ids in acceptance order.
    pub selected: Vec<String>,
    /// Set when fewer than `b` frames could be selected.
    pub exhausted: bool,
}

fn by_score_desc(a: &(f64, &FrameRecord), b: &(f64, &FrameRecord)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.frame_id.cmp(&b.1.frame_id))
}

/// Picks up to `b` frames. Still: the `b` highest scores. Video: frames are
/// visited in descending (smoothed) score and accepted while selectable under
/// `ledger`; every acceptance is recorded in the ledger. Ties go to the
/// smaller frame id.
pub fn rank_and_select(
    frames: &[FrameRecord],
    b: usize,
    ledger: &mut ExclusionLedger,
    rules: &TemporalRuleConfig,
    scenario: Scenario,
) -> Result<SelectionOutcome> {
    let mut ranked: Vec<(f64, &FrameRecord)> = frames
        .iter()
        .map(|f| {
            let z = match scenario {
                Scenario::Still => f.score,
                Scenario::Video => f.ranking_score(),
            };
            z.map(|z| (z, f))
                .ok_or_else(|| Error::MissingScore(f.frame_id.clone()))
        })
        .collect::<Result<_>>()?;
    ranked.sort_by(by_score_desc);
    let order = ranked.into_iter().map(|(_, f)| f);
    Ok(accept_in_order(order, b, ledger, rules, scenario))
}

/// Same acceptance loop as [`rank_and_select`] over a seeded uniform shuffle
/// of the candidates.
pub fn select_guided_random(
    frames: &[FrameRecord],
    b: usize,
    ledger: &mut ExclusionLedger,
    rules: &TemporalRuleConfig,
    scenario: Scenario,
    seed: u64,
) -> SelectionOutcome {
    let mut order: Vec<&FrameRecord> = frames.iter().collect();
    order.sort_by(|a, c| a.frame_id.cmp(&c.frame_id));
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    accept_in_order(order.into_iter(), b, ledger, rules, scenario)
}

fn accept_in_order<'a>(
    order: impl Iterator<Item = &'a FrameRecord>,
    b: usize,
    ledger: &mut ExclusionLedger,
    rules: &TemporalRuleConfig,
    scenario: Scenario,
) -> SelectionOutcome {
    let mut selected = Vec::with_capacity(b);
    // Acceptance only ever adds exclusions, so a frame rejected once stays
    // rejected and a single pass equals re-scanning after every pick.
    for frame in order {
        if selected.len() == b {
            break;
        }
        if scenario == Scenario::Video && !ledger.is_selectable(frame) {
            continue;
        }
        if scenario == Scenario::Video {
            ledger.record_selection(frame, rules);
        }
        selected.push(frame.frame_id.clone());
    }
    let exhausted = selected.len() < b;
    if exhausted {
        log::warn!(
            "candidate pool exhausted: selected {} of {b} frames",
            selected.len()
        );
    }
    SelectionOutcome { selected, exhausted }
}
