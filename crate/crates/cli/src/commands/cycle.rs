use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use framesel_core::budget::BudgetPlan;
use framesel_core::model::{FrameRecord, Manifest};
use framesel_core::pipeline::{FrameScorer, ManifestScorer, PrecomputedScores};
use framesel_core::pool::{run_cycle, CycleOptions, CycleReport, PoolState};
use framesel_core::selection::{rank_and_select, select_guided_random, Scenario, Strategy};
use framesel_core::stats::{report_statistics, AnnotationFilter, CycleStats};
use framesel_core::temporal::{smooth_records, ExclusionLedger, SmoothingConfig, TemporalRuleConfig};

use crate::args::{CycleRunCmd, ReportCmd, SelectCmd};
use crate::commands::score::{read_scores, ScoreRow};
use crate::config::EngineConfig;
use crate::failure::{CmdResult, Failure};
use crate::output::emit;

fn usage(msg: String) -> Failure {
    Failure::usage(anyhow::anyhow!(msg))
}

fn data(msg: String) -> Failure {
    Failure::data(anyhow::anyhow!(msg))
}

fn to_records(rows: &[ScoreRow]) -> CmdResult<Vec<FrameRecord>> {
    let mut seen = BTreeSet::new();
    rows.iter()
        .map(|r| {
            if !seen.insert(r.frame_id.as_str()) {
                return Err(data(format!(
                    "frame {} appears twice in the score table",
                    r.frame_id
                )));
            }
            if !r.score.is_finite() {
                return Err(data(format!("frame {} has a non-finite score", r.frame_id)));
            }
            let record = match (&r.video_id, r.temporal_index) {
                (Some(v), Some(t)) => FrameRecord::video(r.frame_id.clone(), v.clone(), t),
                (None, None) => FrameRecord::still(r.frame_id.clone()),
                _ => {
                    return Err(data(format!(
                        "frame {} needs both video_id and temporal_index or neither",
                        r.frame_id
                    )))
                }
            };
            Ok(record.with_score(r.score))
        })
        .collect()
}

fn default_scenario(video: bool) -> Scenario {
    if video {
        Scenario::Video
    } else {
        Scenario::Still
    }
}

#[derive(Serialize)]
struct SelectRow<'a> {
    rank: usize,
    frame_id: &'a str,
    video_id: Option<&'a str>,
    temporal_index: Option<i64>,
    score: Option<f64>,
    smoothed_score: Option<f64>,
}

const SELECT_HEADER: &[&str] = &[
    "rank",
    "frame_id",
    "video_id",
    "temporal_index",
    "score",
    "smoothed_score",
];

#[derive(Serialize)]
struct SelectSidecar {
    command: &'static str,
    strategy: Strategy,
    scenario: Scenario,
    cycle_budget: usize,
    seed: Option<u64>,
    smoothing: Option<SmoothingConfig>,
    rules: Option<TemporalRuleConfig>,
    candidates: usize,
    selected: usize,
    exhausted: bool,
}

fn random_seed(strategy: Strategy, flag: Option<u64>, cfg: &EngineConfig) -> CmdResult<Option<u64>> {
    let seed = flag.or(cfg.seed);
    if strategy == Strategy::GuidedRandom && seed.is_none() {
        return Err(usage("guided-random selection needs --seed".into()));
    }
    Ok(seed)
}

pub fn select(cmd: &SelectCmd, cfg: &EngineConfig) -> CmdResult {
    let b = cmd
        .cycle_budget
        .or(cfg.cycle_budget)
        .ok_or_else(|| usage("select needs a cycle budget (--b)".into()))?;
    if b == 0 {
        return Err(usage("cycle budget b must be at least 1".into()));
    }
    let strategy: Strategy = cmd.strategy.unwrap_or(cfg.strategy).into();
    let seed = random_seed(strategy, cmd.seed, cfg)?;
    let smoothing = cfg.smoothing(&cmd.temporal)?;
    let rules = cfg.rules(&cmd.temporal)?;

    let mut frames = to_records(&read_scores(&cmd.scores)?)?;
    let all_video = !frames.is_empty() && frames.iter().all(|f| f.video_position().is_some());
    let scenario = cmd
        .scenario
        .or(cfg.scenario)
        .map_or(default_scenario(all_video), Into::into);

    let smoothing = smoothing.filter(|_| scenario == Scenario::Video && strategy != Strategy::GuidedRandom);
    if let Some(s) = &smoothing {
        smooth_records(&mut frames, s)?;
    }
    let mut ledger = ExclusionLedger::new();
    let active_rules = rules.unwrap_or(TemporalRuleConfig::NONE);
    let outcome = match (strategy, seed) {
        (Strategy::GuidedRandom, Some(seed)) => {
            select_guided_random(&frames, b, &mut ledger, &active_rules, scenario, seed)
        }
        _ => rank_and_select(&frames, b, &mut ledger, &active_rules, scenario)?,
    };

    let by_id: HashMap<&str, &FrameRecord> = frames.iter().map(|f| (f.frame_id.as_str(), f)).collect();
    let rows: Vec<SelectRow> = outcome
        .selected
        .iter()
        .enumerate()
        .map(|(rank, id)| {
            let f = by_id[id.as_str()];
            SelectRow {
                rank: rank + 1,
                frame_id: &f.frame_id,
                video_id: f.video_id.as_deref(),
                temporal_index: f.temporal_index,
                score: f.score,
                smoothed_score: f.smoothed_score,
            }
        })
        .collect();
    let sidecar = SelectSidecar {
        command: "select",
        strategy,
        scenario,
        cycle_budget: b,
        seed,
        smoothing,
        rules,
        candidates: frames.len(),
        selected: rows.len(),
        exhausted: outcome.exhausted,
    };
    emit(cmd.out.as_deref(), &rows, SELECT_HEADER, &sidecar)
}

#[derive(Serialize)]
struct CycleRow<'a> {
    cycle: u32,
    rank: usize,
    frame_id: &'a str,
}

#[derive(Serialize)]
struct CycleSidecar<'a> {
    command: &'static str,
    strategy: Strategy,
    scenario: Scenario,
    plan: BudgetPlan,
    cycles_completed: u32,
    cycles_remaining: usize,
    training_manifest: &'a Path,
    report: &'a CycleReport,
}

pub fn cycle_run(cmd: &CycleRunCmd, cfg: &EngineConfig) -> CmdResult {
    let plan = cfg.plan(&cmd.budget, (500, 7000))?;
    let strategy: Strategy = cmd.strategy.unwrap_or(cfg.strategy).into();
    let mut pipeline = cfg.pipeline(&cmd.score)?;
    if let Some(method) = strategy.score_method() {
        pipeline.score.method = method;
    }
    let workers = cfg.workers(cmd.score.workers)?;
    let smoothing = cfg.smoothing(&cmd.temporal)?;
    let rules = cfg.rules(&cmd.temporal)?;
    let seed = cmd.seed.or(cfg.seed);

    let manifest = Manifest::load(&cmd.manifest)?;
    let mut pool = if cmd.pool.exists() {
        let pool = PoolState::load(&cmd.pool)?;
        if let Some(seed) = seed.filter(|&s| s != pool.rng_seed) {
            return Err(usage(format!(
                "--seed {seed} does not match the seed {} stored in {}",
                pool.rng_seed,
                cmd.pool.display()
            )));
        }
        pool
    } else {
        let seed = seed.ok_or_else(|| usage("creating a new pool needs --seed".into()))?;
        let mut pool = PoolState::new(manifest.frames.iter().map(|f| f.frame_id.clone()), seed);
        pool.manifest = Some(cmd.manifest.display().to_string());
        pool
    };
    if plan.total() > pool.total() {
        return Err(usage(format!(
            "total budget B={} exceeds the {} frames of the pool",
            plan.total(),
            pool.total()
        )));
    }

    let scenario = cmd
        .scenario
        .or(cfg.scenario)
        .map_or(default_scenario(manifest.has_video()), Into::into);
    let catalog = manifest.records();
    let precomputed;
    let from_manifest;
    let scorer: &dyn FrameScorer = match &cmd.scores {
        Some(path) => {
            let rows = read_scores(path)?;
            precomputed = PrecomputedScores(rows.into_iter().map(|r| (r.frame_id, r.score)).collect());
            &precomputed
        }
        None => {
            from_manifest = ManifestScorer::new(&manifest, pipeline);
            &from_manifest
        }
    };
    let opts = CycleOptions {
        strategy,
        scenario,
        rules,
        smoothing,
        workers,
    };
    let report = run_cycle(&mut pool, &catalog, scorer, &plan, &opts)?;
    pool.save(&cmd.pool)?;

    let training = cmd.training_manifest.clone().unwrap_or_else(|| {
        let dir = cmd.pool.parent().unwrap_or(Path::new(""));
        dir.join(format!("training_cycle_{}.json", report.cycle))
    });
    pool.write_training_manifest(&training)?;

    let rows: Vec<CycleRow> = report
        .selected
        .iter()
        .enumerate()
        .map(|(rank, id)| CycleRow {
            cycle: report.cycle,
            rank: rank + 1,
            frame_id: id,
        })
        .collect();
    let sidecar = CycleSidecar {
        command: "cycle run",
        strategy,
        scenario,
        plan,
        cycles_completed: pool.cycle_index,
        cycles_remaining: plan.cycles() - pool.cycle_index as usize,
        training_manifest: &training,
        report: &report,
    };
    emit(
        cmd.out.as_deref(),
        &rows,
        &["cycle", "rank", "frame_id"],
        &sidecar,
    )?;
    eprintln!(
        "cycle {}: selected {} frames ({} unlabeled left); training manifest {}",
        report.cycle,
        report.selected.len(),
        report.unlabeled_after,
        training.display()
    );

    if let Some(marker) = &cmd.wait_for {
        wait_for(marker, cmd.wait_timeout.map(Duration::from_secs))?;
    }
    Ok(())
}

fn wait_for(marker: &Path, timeout: Option<Duration>) -> CmdResult {
    log::info!("waiting for {}", marker.display());
    let start = Instant::now();
    while !marker.exists() {
        if timeout.is_some_and(|t| start.elapsed() >= t) {
            return Err(data(format!("timed out waiting for {}", marker.display())));
        }
        std::thread::sleep(Duration::from_millis(200));
    }
    Ok(())
}

const STATS_HEADER: &[&str] = &[
    "cycle",
    "frames",
    "instances",
    "frames_with_instances",
    "cumulative_frames",
    "cumulative_instances",
    "cumulative_frames_with_instances",
];

#[derive(Serialize)]
struct ReportSidecar<'a> {
    command: &'static str,
    manifest: &'a Path,
    filter: Option<AnnotationFilter>,
    cycles_completed: u32,
    unlabeled: usize,
    total: CycleStats,
}

pub fn report(cmd: &ReportCmd, _cfg: &EngineConfig) -> CmdResult {
    let pool = PoolState::load(&cmd.pool)?;
    let manifest_path: PathBuf = match (&cmd.manifest, &pool.manifest) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(usage("the pool records no manifest; pass --manifest".into())),
    };
    let manifest = Manifest::load(&manifest_path)?;
    let filter = (!cmd.no_filter).then(AnnotationFilter::default);
    let stats = report_statistics(&pool, &manifest.records(), filter.as_ref());
    let sidecar = ReportSidecar {
        command: "report",
        manifest: &manifest_path,
        filter,
        cycles_completed: pool.cycle_index,
        unlabeled: pool.unlabeled.len(),
        total: stats.total(),
    };
    emit(cmd.out.as_deref(), &stats.cycles, STATS_HEADER, &sidecar)
}
