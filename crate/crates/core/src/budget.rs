//! Labeling budget and time-to-completion model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total budget `B` split into cycles of `b` frames; `B` must be a multiple of `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPlan", into = "RawPlan")]
pub struct BudgetPlan {
    total: usize,
    per_cycle: usize,
}

#[derive(Serialize, Deserialize)]
struct RawPlan {
    total_budget: usize,
    cycle_budget: usize,
}

impl TryFrom<RawPlan> for BudgetPlan {
    type Error = Error;

    fn try_from(raw: RawPlan) -> Result<Self> {
        BudgetPlan::new(raw.total_budget, raw.cycle_budget)
    }
}

impl From<BudgetPlan> for RawPlan {
    fn from(p: BudgetPlan) -> Self {
        RawPlan {
            total_budget: p.total,
            cycle_budget: p.per_cycle,
        }
    }
}

impl BudgetPlan {
    pub fn new(total: usize, per_cycle: usize) -> Result<Self> {
        if per_cycle == 0 {
            return Err(Error::InvalidConfig("cycle budget b must be at least 1".into()));
        }
        if total < per_cycle {
            return Err(Error::InvalidConfig(format!(
                "total budget B={total} is smaller than cycle budget b={per_cycle}"
            )));
        }
        if !total.is_multiple_of(per_cycle) {
            return Err(Error::InvalidConfig(format!(
                "total budget B={total} is not a multiple of cycle budget b={per_cycle}"
            )));
        }
        Ok(BudgetPlan { total, per_cycle })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn per_cycle(&self) -> usize {
        self.per_cycle
    }

    pub fn cycles(&self) -> usize {
        self.total / self.per_cycle
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtcParams {
    /// Seconds per frame for scoring (forward pass incl. mirrored copy).
    pub t_forward: f64,
    /// Seconds per frame for one training step (forward + backward).
    pub t_forward_backward: f64,
    pub epochs: u32,
    pub pool_size: usize,
}

impl TtcParams {
    pub fn with_pool(pool_size: usize) -> Self {
        TtcParams {
            t_forward: 0.15,
            t_forward_backward: 0.20,
            epochs: 50,
            pool_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok =
            self.t_forward > 0.0 && self.t_forward_backward > 0.0 && self.epochs > 0 && self.pool_size > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "TTC parameters must be positive: {self:?}"
            )))
        }
    }
}

/// Seconds to finish all `K = B/b` cycles: each cycle scores the remaining
/// unlabeled pool, then retrains from scratch for `epochs` passes over the
/// accumulated labeled set. Labeling time is excluded.
pub fn estimate_ttc(plan: &BudgetPlan, params: &TtcParams) -> f64 {
    let k = plan.cycles();
    let b = plan.per_cycle() as f64;
    let n = params.pool_size as f64;
    let epochs = params.epochs as f64;
    (0..k)
        .map(|c| {
            let scoring = (n - c as f64 * b).max(0.0) * params.t_forward;
            let training = (c + 1) as f64 * b * epochs * params.t_forward_backward;
            scoring + training
        })
        .sum()
}
