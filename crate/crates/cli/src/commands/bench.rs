use std::io::Write;
use std::path::Path;

use serde::Serialize;

use framesel_core::aggregate::Aggregation;
use framesel_core::budget::{estimate_ttc, BudgetPlan, TtcParams};
use framesel_core::selection::Strategy;
use framesel_core::synth::{
    generate_world, paired_sign_test, simulate as run_simulation, SignTest, SimulationOptions,
    SimulationReport, SurrogateDetector, WorldConfig,
};
use framesel_core::temporal::{SmoothingConfig, TemporalRuleConfig};

use crate::args::{GenerateCmd, SimulateCmd, TtcCmd};
use crate::config::EngineConfig;
use crate::failure::{CmdResult, Context, Failure};
use crate::output::{emit, json_bytes, report_paths, write_file};

#[derive(Serialize)]
struct TtcRow {
    pool_size: usize,
    cycle_budget: usize,
    total_budget: usize,
    cycles: usize,
    epochs: u32,
    t_forward: f64,
    t_forward_backward: f64,
    seconds: f64,
    hours: f64,
}

pub fn ttc(cmd: &TtcCmd, cfg: &EngineConfig) -> CmdResult {
    let plan = cfg.plan(&cmd.budget, (500, 7000))?;
    let params = TtcParams {
        t_forward: cmd.t_forward.unwrap_or(cfg.t_forward),
        t_forward_backward: cmd.t_forward_backward.unwrap_or(cfg.t_forward_backward),
        epochs: cmd.epochs.unwrap_or(cfg.epochs),
        pool_size: cmd.pool_size,
    };
    params.validate()?;
    if plan.total() > params.pool_size {
        return Err(Failure::usage(anyhow::anyhow!(
            "total budget B={} exceeds the pool size N={}",
            plan.total(),
            params.pool_size
        )));
    }
    let seconds = estimate_ttc(&plan, &params);
    let row = TtcRow {
        pool_size: params.pool_size,
        cycle_budget: plan.per_cycle(),
        total_budget: plan.total(),
        cycles: plan.cycles(),
        epochs: params.epochs,
        t_forward: params.t_forward,
        t_forward_backward: params.t_forward_backward,
        seconds,
        hours: seconds / 3600.0,
    };
    println!(
        "ttc: {:.1} h ({:.0} s) for N={} b={} B={} over K={} cycles",
        row.hours, row.seconds, row.pool_size, row.cycle_budget, row.total_budget, row.cycles
    );
    if let Some(out) = &cmd.out {
        emit(Some(out), std::slice::from_ref(&row), &[], &row)?;
    }
    Ok(())
}

fn load_world_config(path: Option<&Path>) -> CmdResult<WorldConfig> {
    let Some(path) = path else {
        return Ok(WorldConfig::default());
    };
    let text = std::fs::read_to_string(path).data_context(format!("cannot read {}", path.display()))?;
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

#[derive(Serialize)]
struct StrategySummary {
    strategy: Strategy,
    aggregation: Aggregation,
    mean_final_coverage: f64,
    mean_instances: f64,
    mean_uncovered_frame_fraction: f64,
    mean_coverage_by_cycle: Vec<f64>,
    final_coverage: Vec<f64>,
    instances: Vec<f64>,
}

impl From<&SimulationReport> for StrategySummary {
    fn from(r: &SimulationReport) -> Self {
        StrategySummary {
            strategy: r.strategy,
            aggregation: r.aggregation,
            mean_final_coverage: r.mean_final_coverage,
            mean_instances: r.mean_instances,
            mean_uncovered_frame_fraction: r.mean_uncovered_frame_fraction,
            mean_coverage_by_cycle: r.mean_coverage_by_cycle.clone(),
            final_coverage: r.final_coverages(),
            instances: r.instance_counts(),
        }
    }
}

#[derive(Serialize)]
struct Comparison {
    baseline: StrategySummary,
    coverage_sign_test: SignTest,
    instances_sign_test: SignTest,
}

#[derive(Serialize)]
struct SimulateSidecar<'a> {
    command: &'static str,
    world: &'a WorldConfig,
    plan: BudgetPlan,
    seeds: &'a [u64],
    rules: Option<TemporalRuleConfig>,
    smoothing: Option<SmoothingConfig>,
    result: StrategySummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
}

pub fn simulate(cmd: &SimulateCmd, cfg: &EngineConfig) -> CmdResult {
    let world_cfg = load_world_config(cmd.world_config.as_deref())?;
    let plan = cfg.plan(&cmd.budget, (20, 200))?;
    let seed = cmd
        .seed
        .or(cfg.seed)
        .ok_or_else(|| Failure::usage(anyhow::anyhow!("simulate needs --seed")))?;
    let n = cmd.seeds.unwrap_or(cfg.seeds);
    if n == 0 {
        return Err(Failure::usage(anyhow::anyhow!("--seeds must be at least 1")));
    }
    let seeds: Vec<u64> = (0..n as u64).map(|i| seed.wrapping_add(i)).collect();
    let opts = SimulationOptions {
        strategy: cmd.strategy.unwrap_or(cfg.strategy).into(),
        aggregation: cmd.aggregate.unwrap_or(cfg.aggregate).into(),
        rules: cfg.rules(&cmd.temporal)?,
        smoothing: cfg.smoothing(&cmd.temporal)?,
        workers: cfg.workers(cmd.workers)?,
    };
    let world = generate_world(&world_cfg)?;
    let report = run_simulation(&world, &plan, &opts, &seeds)?;
    let baseline = cmd
        .baseline
        .map(|b| {
            run_simulation(
                &world,
                &plan,
                &SimulationOptions {
                    strategy: b.into(),
                    ..opts
                },
                &seeds,
            )
        })
        .transpose()?;

    let mut table = Vec::new();
    report.write_csv(&mut table)?;
    if let Some(base) = &baseline {
        let mut rows = Vec::new();
        base.write_csv(&mut rows)?;
        let body = rows
            .iter()
            .position(|&c| c == b'\n')
            .map_or(&rows[..0], |i| &rows[i + 1..]);
        table.extend_from_slice(body);
    }

    let comparison = baseline.as_ref().map(|base| Comparison {
        baseline: base.into(),
        coverage_sign_test: paired_sign_test(&report.final_coverages(), &base.final_coverages()),
        instances_sign_test: paired_sign_test(&report.instance_counts(), &base.instance_counts()),
    });
    let sidecar = SimulateSidecar {
        command: "simulate",
        world: &world_cfg,
        plan,
        seeds: &seeds,
        rules: opts.rules,
        smoothing: opts.smoothing,
        result: (&report).into(),
        comparison,
    };
    match &cmd.out {
        Some(out) => {
            let (csv_path, json_path) = report_paths(out);
            write_file(&csv_path, &table)?;
            write_file(&json_path, &json_bytes(&sidecar)?)?;
            println!(
                "{:?}: mean coverage {:.4}, mean instances {:.2} over {} seeds",
                opts.strategy, report.mean_final_coverage, report.mean_instances, n
            );
            if let Some(c) = &sidecar.comparison {
                println!(
                    "{:?}: mean coverage {:.4}, mean instances {:.2}; sign test p (coverage) {:.4e}, p (instances) {:.4e}",
                    c.baseline.strategy,
                    c.baseline.mean_final_coverage,
                    c.baseline.mean_instances,
                    c.coverage_sign_test.p_value,
                    c.instances_sign_test.p_value
                );
            }
            Ok(())
        }
        None => std::io::stdout()
            .write_all(&table)
            .data_context("cannot write to stdout"),
    }
}

pub fn generate(cmd: &GenerateCmd, cfg: &EngineConfig) -> CmdResult {
    let world_cfg = load_world_config(cmd.world_config.as_deref())?;
    let seed = cmd
        .seed
        .or(cfg.seed)
        .ok_or_else(|| Failure::usage(anyhow::anyhow!("generate needs --seed")))?;
    let covered = cmd
        .covered
        .clone()
        .unwrap_or_else(|| world_cfg.initially_covered.clone());
    if let Some(c) = covered.iter().find(|&&c| c >= world_cfg.num_clusters()) {
        return Err(Failure::usage(anyhow::anyhow!(
            "cluster {c} does not exist (world has {})",
            world_cfg.num_clusters()
        )));
    }
    let world = generate_world(&world_cfg)?;
    let detector = SurrogateDetector::new(covered, seed);
    let manifest = world.write_dataset(&cmd.out, &detector)?;
    println!(
        "wrote {} frames to {}",
        manifest.frames.len(),
        cmd.out.join("manifest.json").display()
    );
    Ok(())
}
