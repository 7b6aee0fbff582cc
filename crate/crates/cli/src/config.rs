use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use framesel_core::aggregate::AggregationConfig;
use framesel_core::budget::{BudgetPlan, TtcParams};
use framesel_core::pipeline::PipelineConfig;
use framesel_core::scoring::ScoreConfig;
use framesel_core::temporal::{SmoothingConfig, TemporalRuleConfig};

use crate::args::{
    AggregateArg, AggregationOpts, BorderArg, BudgetOpts, MethodArg, ScenarioArg, ScoreOpts, StrategyArg,
    TemporalOpts,
};
use crate::failure::{CmdResult, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionSize {
    pub width: usize,
    pub height: usize,
}

impl FromStr for RegionSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("invalid region size `{s}`: expected WxH with positive integers"))
        };
        match s.split_once(['x', 'X']) {
            Some((w, h)) => Ok(RegionSize {
                width: parse(w)?,
                height: parse(h)?,
            }),
            None => parse(s).map(|n| RegionSize { width: n, height: n }),
        }
    }
}

impl fmt::Display for RegionSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl Serialize for RegionSize {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RegionSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Every tunable in one document. Budgets have no global default because
/// sensible values differ between real pools and the synthetic world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub method: MethodArg,
    pub radius: usize,
    pub border: BorderArg,
    pub mirror: bool,
    pub region_size: RegionSize,
    pub aggregate: AggregateArg,
    pub smoothing: bool,
    pub smooth_window: u32,
    pub smooth_sigma: f64,
    pub temporal_rules: bool,
    pub dt1: u32,
    pub dt2: u32,
    pub strategy: StrategyArg,
    pub scenario: Option<ScenarioArg>,
    pub cycle_budget: Option<usize>,
    pub total_budget: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: usize,
    pub workers: Option<usize>,
    pub epochs: u32,
    pub t_forward: f64,
    pub t_forward_backward: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let smoothing = SmoothingConfig::default();
        let rules = TemporalRuleConfig::default();
        let agg = AggregationConfig::default();
        let ttc = TtcParams::with_pool(0);
        EngineConfig {
            method: MethodArg::Proposed,
            radius: ScoreConfig::default().radius,
            border: BorderArg::Actual,
            mirror: false,
            region_size: RegionSize {
                width: agg.region_width,
                height: agg.region_height,
            },
            aggregate: AggregateArg::MaxpoolMean,
            smoothing: true,
            smooth_window: smoothing.half_window,
            smooth_sigma: smoothing.sigma,
            temporal_rules: true,
            dt1: rules.dt1,
            dt2: rules.dt2,
            strategy: StrategyArg::Proposed,
            scenario: None,
            cycle_budget: None,
            total_budget: None,
            seed: None,
            seeds: 20,
            workers: None,
            epochs: ttc.epochs,
            t_forward: ttc.t_forward,
            t_forward_backward: ttc.t_forward_backward,
        }
    }
}

impl EngineConfig {
    pub fn load(path: Option<&Path>) -> CmdResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(anyhow::anyhow!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
            Failure::usage(anyhow::anyhow!(
                "{}:{}:{}: {msg}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    pub fn aggregation(&self, opts: &AggregationOpts) -> AggregationConfig {
        let region = opts.region_size.unwrap_or(self.region_size);
        AggregationConfig {
            region_width: region.width,
            region_height: region.height,
            method: opts.aggregate.unwrap_or(self.aggregate).into(),
        }
    }

    pub fn pipeline(&self, opts: &ScoreOpts) -> CmdResult<PipelineConfig> {
        let cfg = PipelineConfig {
            score: ScoreConfig {
                method: opts.method.unwrap_or(self.method).into(),
                radius: opts.radius.unwrap_or(self.radius),
                border_mode: opts.border.unwrap_or(self.border).into(),
                mirror_average: opts.mirror || self.mirror,
            },
            aggregation: self.aggregation(&opts.aggregation),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn workers(&self, flag: Option<usize>) -> CmdResult<Option<usize>> {
        match flag.or(self.workers) {
            Some(0) => Err(Failure::usage(anyhow::anyhow!("--workers must be at least 1"))),
            w => Ok(w),
        }
    }

    pub fn smoothing(&self, opts: &TemporalOpts) -> CmdResult<Option<SmoothingConfig>> {
        if opts.no_smoothing || !self.smoothing {
            return Ok(None);
        }
        let cfg = SmoothingConfig {
            half_window: opts.smooth_window.unwrap_or(self.smooth_window),
            sigma: opts.smooth_sigma.unwrap_or(self.smooth_sigma),
        };
        cfg.validate()?;
        Ok(Some(cfg))
    }

    pub fn rules(&self, opts: &TemporalOpts) -> CmdResult<Option<TemporalRuleConfig>> {
        if opts.no_temporal_rules || !self.temporal_rules {
            return Ok(None);
        }
        let cfg = TemporalRuleConfig {
            dt1: opts.dt1.unwrap_or(self.dt1),
            dt2: opts.dt2.unwrap_or(self.dt2),
        };
        cfg.validate()?;
        Ok(Some(cfg))
    }

    /// Budget from flags, then config, then the command's own fallback.
    pub fn plan(&self, opts: &BudgetOpts, fallback: (usize, usize)) -> CmdResult<BudgetPlan> {
        let b = opts.cycle_budget.or(self.cycle_budget).unwrap_or(fallback.0);
        let total = opts.total_budget.or(self.total_budget).unwrap_or(fallback.1);
        Ok(BudgetPlan::new(total, b)?)
    }
}
