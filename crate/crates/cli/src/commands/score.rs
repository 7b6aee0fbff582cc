use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use framesel_core::aggregate::{image_score, AggregationConfig};
use framesel_core::model::{read_probability_stack, write_probability_stack, Manifest, ManifestFrame};
use framesel_core::pipeline::{par_map, PipelineConfig};
use framesel_core::scoring::{max_score, ScoreMap};

use crate::args::{AggregateCmd, ScoreCmd};
use crate::config::EngineConfig;
use crate::failure::{CmdResult, Context, Failure};
use crate::output::emit;

pub const SCORE_HEADER: &[&str] = &["frame_id", "video_id", "temporal_index", "score"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub frame_id: String,
    pub video_id: Option<String>,
    pub temporal_index: Option<i64>,
    pub score: f64,
}

#[derive(Serialize)]
struct Summary {
    frames: usize,
    min: Option<f64>,
    max: Option<f64>,
    mean: Option<f64>,
}

impl Summary {
    fn of(scores: &[f64]) -> Self {
        let n = scores.len();
        Summary {
            frames: n,
            min: scores.iter().copied().reduce(f64::min),
            max: scores.iter().copied().reduce(f64::max),
            mean: (n > 0).then(|| scores.iter().sum::<f64>() / n as f64),
        }
    }
}

#[derive(Serialize)]
struct DumpInfo<'a> {
    dir: &'a Path,
    /// Dumped maps hold score / scale; one entry per distinct branch count.
    scales: Vec<f64>,
}

#[derive(Serialize)]
struct ScoreSidecar<'a> {
    command: &'static str,
    pipeline: PipelineConfig,
    summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    dump: Option<DumpInfo<'a>>,
}

enum Source<'a> {
    Entry(&'a ManifestFrame),
    File(&'a PathBuf),
}

pub fn score(cmd: &ScoreCmd, cfg: &EngineConfig) -> CmdResult {
    let pipeline = cfg.pipeline(&cmd.score)?;
    let workers = cfg.workers(cmd.score.workers)?;
    let manifest = cmd.manifest.as_deref().map(Manifest::load).transpose()?;
    let sources: Vec<Source> = match &manifest {
        Some(m) => m.frames.iter().map(Source::Entry).collect(),
        None => cmd.stack.iter().map(Source::File).collect(),
    };
    if let Some(dir) = &cmd.dump_maps {
        std::fs::create_dir_all(dir).data_context(format!("cannot create {}", dir.display()))?;
    }

    let results = par_map(workers, &sources, |src| -> CmdResult<(ScoreRow, usize)> {
        let (label, loaded, video_id, temporal_index) = match src {
            Source::Entry(f) => {
                let m = manifest.as_ref().expect("entries come from the manifest");
                let label = m
                    .stack_path(f)
                    .map_or_else(|| f.frame_id.clone(), |p| p.display().to_string());
                (label, m.load_stack(f), f.video_id.clone(), f.temporal_index)
            }
            Source::File(p) => (p.display().to_string(), read_probability_stack(p), None, None),
        };
        let stack = loaded.map_err(|e| Failure::from(e).context(label.clone()))?;
        let map = pipeline
            .score_map(&stack)
            .map_err(|e| Failure::from(e).context(label.clone()))?;
        if let Some(dir) = &cmd.dump_maps {
            let dump = map.to_stack(max_score(stack.branches()))?;
            write_probability_stack(&dump, dir.join(format!("{}.alpm", map.frame_id)))?;
        }
        let row = ScoreRow {
            score: image_score(&map, &pipeline.aggregation),
            frame_id: map.frame_id,
            video_id,
            temporal_index,
        };
        Ok((row, stack.branches()))
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut branch_counts = Vec::new();
    for r in results {
        let (row, k) = r?;
        rows.push(row);
        branch_counts.push(k);
    }
    branch_counts.sort_unstable();
    branch_counts.dedup();

    let scores: Vec<f64> = rows.iter().map(|r| r.score).collect();
    let sidecar = ScoreSidecar {
        command: "score",
        pipeline,
        summary: Summary::of(&scores),
        dump: cmd.dump_maps.as_deref().map(|dir| DumpInfo {
            dir,
            scales: branch_counts.iter().map(|&k| max_score(k)).collect(),
        }),
    };
    emit(cmd.out.as_deref(), &rows, SCORE_HEADER, &sidecar)
}

#[derive(Serialize)]
struct AggregateRow {
    frame_id: String,
    score: f64,
}

#[derive(Serialize)]
struct AggregateSidecar {
    command: &'static str,
    aggregation: AggregationConfig,
    scale: f64,
    summary: Summary,
}

pub fn aggregate(cmd: &AggregateCmd, cfg: &EngineConfig) -> CmdResult {
    let aggregation = cfg.aggregation(&cmd.aggregation);
    aggregation.validate()?;
    if !(cmd.scale > 0.0 && cmd.scale.is_finite()) {
        return Err(Failure::usage(anyhow::anyhow!(
            "--scale must be positive, got {}",
            cmd.scale
        )));
    }
    let mut rows = Vec::with_capacity(cmd.maps.len());
    for path in &cmd.maps {
        let stack =
            read_probability_stack(path).map_err(|e| Failure::from(e).context(path.display().to_string()))?;
        if stack.branches() != 1 || stack.mc_samples() != 1 {
            return Err(Failure::data(anyhow::anyhow!(
                "{} holds {} branches x {} samples; a score map has exactly one matrix",
                path.display(),
                stack.branches(),
                stack.mc_samples()
            )));
        }
        let values = stack.data().iter().map(|&v| v as f64 * cmd.scale).collect();
        let map = ScoreMap::new(stack.frame_id.clone(), stack.width(), stack.height(), values);
        rows.push(AggregateRow {
            score: image_score(&map, &aggregation),
            frame_id: stack.frame_id,
        });
    }
    let scores: Vec<f64> = rows.iter().map(|r| r.score).collect();
    let sidecar = AggregateSidecar {
        command: "aggregate",
        aggregation,
        scale: cmd.scale,
        summary: Summary::of(&scores),
    };
    emit(cmd.out.as_deref(), &rows, &["frame_id", "score"], &sidecar)
}

/// Reads a score table as written by `score`.
pub fn read_scores(path: &Path) -> CmdResult<Vec<ScoreRow>> {
    let mut reader = csv::Reader::from_path(path).data_context(format!("cannot open {}", path.display()))?;
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.data_context(format!("{}: bad row {}", path.display(), i + 2)))
        .collect()
}
