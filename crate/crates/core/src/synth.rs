//! Seeded synthetic worlds and a closed-loop simulation harness.
//!
//! A world is a set of videos whose frames belong to latent appearance
//! clusters with a skewed size distribution. The surrogate detector "knows" a
//! cluster once any of its frames is labeled: frames of known clusters get
//! smooth, confident probability blobs at object locations, frames of unknown
//! clusters get oscillating maps inside object boxes. Retraining is thus
//! replaced by set-cover semantics, which makes full selection loops cheap
//! enough to repeat over many seeds.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::aggregate::{Aggregation, AggregationConfig};
use crate::budget::BudgetPlan;
use crate::error::{Error, Result};
use crate::model::{
    default_branch_specs, map_box_to_branch, validate_branch_specs, write_probability_stack, BoundingBox,
    BranchSpec, FrameRecord, Manifest, ManifestFrame, ProbabilityStack,
};
use crate::pipeline::{par_map, FnScorer, PipelineConfig};
use crate::pool::{run_cycle, splitmix64, CycleOptions, PoolState};
use crate::scoring::{BorderMode, ScoreConfig, ScoreMethod};
use crate::selection::{Scenario, Strategy};
use crate::temporal::{SmoothingConfig, TemporalRuleConfig};

/// Geometry is a 640x480 frame scaled by 0.2; scoring radius and region size
/// are scaled to match.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    pub num_videos: usize,
    pub frames_per_video: usize,
    /// Relative cluster sizes; frame counts follow these exactly (largest remainder).
    pub cluster_weights: Vec<f64>,
    /// Mean number of objects per frame in each cluster.
    pub cluster_density: Vec<f64>,
    /// Length of contiguous same-cluster runs inside videos.
    pub segment_length: usize,
    pub width: usize,
    pub height: usize,
    pub branches: Vec<BranchSpec>,
    /// Clusters the detector knows before any active labeling.
    pub initially_covered: Vec<usize>,
    pub max_objects: usize,
    pub radius: usize,
    pub region_size: usize,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            num_videos: 20,
            frames_per_video: 100,
            cluster_weights: vec![0.93, 0.04, 0.02, 0.007, 0.003],
            cluster_density: vec![1.0; 5],
            segment_length: 10,
            width: 128,
            height: 96,
            branches: scaled_branch_specs(0.2),
            initially_covered: vec![0],
            max_objects: 6,
            radius: 2,
            region_size: 6,
            seed: 2024,
        }
    }
}

/// Default branch sizes scaled by `factor`.
pub fn scaled_branch_specs(factor: f64) -> Vec<BranchSpec> {
    default_branch_specs()
        .into_iter()
        .map(|s| {
            BranchSpec::new(
                s.branch_index,
                (s.box_height * factor).round(),
                (s.box_width * factor).round(),
            )
        })
        .collect()
}

impl WorldConfig {
    pub fn num_clusters(&self) -> usize {
        self.cluster_weights.len()
    }

    pub fn num_frames(&self) -> usize {
        self.num_videos * self.frames_per_video
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_frames() == 0 {
            return bad("world has no frames".into());
        }
        if self.cluster_weights.is_empty() || self.cluster_weights.iter().any(|w| w.is_nan() || *w <= 0.0) {
            return bad("cluster weights must be positive and non-empty".into());
        }
        if self.cluster_density.len() != self.cluster_weights.len() {
            return bad(format!(
                "{} cluster densities for {} clusters",
                self.cluster_density.len(),
                self.cluster_weights.len()
            ));
        }
        if self.cluster_density.iter().any(|d| d.is_nan() || *d < 0.0) {
            return bad("cluster densities must be non-negative".into());
        }
        if self.segment_length == 0 || self.width == 0 || self.height == 0 || self.region_size == 0 {
            return bad("segment length, frame size and region size must be positive".into());
        }
        if let Some(&c) = self.initially_covered.iter().find(|&&c| c >= self.num_clusters()) {
            return bad(format!("initially covered cluster {c} does not exist"));
        }
        validate_branch_specs(&self.branches)
    }

    /// Scoring setup matching the world's resolution.
    pub fn pipeline(&self, method: ScoreMethod) -> PipelineConfig {
        PipelineConfig {
            score: ScoreConfig {
                method,
                radius: self.radius,
                border_mode: BorderMode::ActualCount,
                mirror_average: false,
            },
            aggregation: AggregationConfig {
                region_width: self.region_size,
                region_height: self.region_size,
                method: Aggregation::MaxpoolMean,
            },
        }
    }

    /// Exact per-cluster frame counts by largest remainder.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let n = self.num_frames();
        let total: f64 = self.cluster_weights.iter().sum();
        let quotas: Vec<f64> = self
            .cluster_weights
            .iter()
            .map(|w| w / total * n as f64)
            .collect();
        let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut remaining = n - sizes.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..sizes.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if remaining == 0 {
                break;
            }
            sizes[i] += 1;
            remaining -= 1;
        }
        sizes
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticFrame {
    pub record: FrameRecord,
    pub cluster: usize,
}

impl SyntheticFrame {
    pub fn objects(&self) -> &[BoundingBox] {
        self.record.annotations.as_deref().unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticWorld {
    pub config: WorldConfig,
    pub frames: Vec<SyntheticFrame>,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)))
}

pub fn generate_world(config: &WorldConfig) -> Result<SyntheticWorld> {
    config.validate()?;
    let sizes = config.cluster_sizes();
    let mut labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    let mut segments: Vec<Vec<usize>> = labels
        .chunks(config.segment_length)
        .map(<[usize]>::to_vec)
        .collect();
    segments.shuffle(&mut rng_for(config.seed, u64::MAX));
    labels = segments.concat();

    let frames = labels
        .iter()
        .enumerate()
        .map(|(i, &cluster)| {
            let video = i / config.frames_per_video;
            let t = (i % config.frames_per_video) as i64;
            let mut rng = rng_for(config.seed, i as u64);
            let density = config.cluster_density[cluster];
            let count = if density > 0.0 {
                let draw: f64 = Poisson::new(density).map(|p| p.sample(&mut rng)).unwrap_or(0.0);
                (draw as usize).min(config.max_objects)
            } else {
                0
            };
            let objects = (0..count).map(|_| random_box(config, &mut rng)).collect();
            let mut record = FrameRecord::video(format!("v{video:03}_f{t:05}"), format!("v{video:03}"), t);
            record.annotations = Some(objects);
            SyntheticFrame { record, cluster }
        })
        .collect();
    Ok(SyntheticWorld {
        config: config.clone(),
        frames,
    })
}

fn random_box(config: &WorldConfig, rng: &mut ChaCha8Rng) -> BoundingBox {
    let spec = config.branches[rng.random_range(0..config.branches.len())];
    let jitter = |rng: &mut ChaCha8Rng| rng.random_range(0.9..1.1);
    let h = (spec.box_height * jitter(rng))
        .round()
        .clamp(1.0, config.height as f64);
    let w = (spec.box_width * jitter(rng))
        .round()
        .clamp(1.0, config.width as f64);
    let x = rng.random_range(0.0..=(config.width as f64 - w)).floor();
    let y = rng.random_range(0.0..=(config.height as f64 - h)).floor();
    BoundingBox {
        x,
        y,
        w,
        h,
        class_label: "pedestrian".into(),
    }
}

impl SyntheticWorld {
    pub fn records(&self) -> Vec<FrameRecord> {
        self.frames.iter().map(|f| f.record.clone()).collect()
    }

    pub fn index_of(&self, frame_id: &str) -> Option<usize> {
        // Ids are generated as v{video}_f{t}; fall back to a scan otherwise.
        let parsed = frame_id
            .strip_prefix('v')
            .and_then(|s| s.split_once("_f"))
            .and_then(|(v, t)| Some((v.parse::<usize>().ok()?, t.parse::<usize>().ok()?)))
            .map(|(v, t)| v * self.config.frames_per_video + t)
            .filter(|&i| i < self.frames.len() && self.frames[i].record.frame_id == frame_id);
        parsed.or_else(|| self.frames.iter().position(|f| f.record.frame_id == frame_id))
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.config.num_clusters()];
        for f in &self.frames {
            sizes[f.cluster] += 1;
        }
        sizes
    }

    /// Writes one `.alpm` stack per frame (as seen by `detector`) under
    /// `dir/stacks/` plus `dir/manifest.json`.
    pub fn write_dataset(&self, dir: impl AsRef<Path>, detector: &SurrogateDetector) -> Result<Manifest> {
        let dir = dir.as_ref();
        let stacks = dir.join("stacks");
        fs::create_dir_all(&stacks).map_err(|e| Error::io(&stacks, e))?;
        let mut entries = Vec::with_capacity(self.frames.len());
        for (i, f) in self.frames.iter().enumerate() {
            let rel = Path::new("stacks").join(format!("{}.alpm", f.record.frame_id));
            write_probability_stack(&surrogate_predict(self, detector, i), dir.join(&rel))?;
            entries.push(ManifestFrame {
                frame_id: f.record.frame_id.clone(),
                video_id: f.record.video_id.clone(),
                temporal_index: f.record.temporal_index,
                stack: Some(rel),
                annotations: f.record.annotations.clone(),
            });
        }
        let mut manifest = Manifest::new(entries);
        manifest.width = Some(self.config.width);
        manifest.height = Some(self.config.height);
        manifest.branches = Some(self.config.branches.clone());
        manifest.save(dir.join("manifest.json"))?;
        manifest.set_base_dir(dir);
        Ok(manifest)
    }
}

/// Stand-in for a trained detector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateDetector {
    pub covered: BTreeSet<usize>,
    pub seed: u64,
    pub background: f32,
    pub peak: f32,
    pub checker_amplitude: f32,
    pub noise: f32,
}

impl SurrogateDetector {
    pub fn new(covered: impl IntoIterator<Item = usize>, seed: u64) -> Self {
        SurrogateDetector {
            covered: covered.into_iter().collect(),
            seed,
            background: 0.02,
            peak: 0.95,
            checker_amplitude: 0.45,
            noise: 0.05,
        }
    }

    pub fn covers(&self, cluster: usize) -> bool {
        self.covered.contains(&cluster)
    }
}

/// Probability maps the surrogate produces for frame `index`.
///
/// Each object lands in the branch whose default size is nearest. Known
/// clusters yield a smooth Gaussian blob (sigma half the box size), unknown
/// clusters a checkerboard-plus-noise pattern filling the box. Background is
/// constant, so empty frames score zero.
pub fn surrogate_predict(
    world: &SyntheticWorld,
    detector: &SurrogateDetector,
    index: usize,
) -> ProbabilityStack {
    let frame = &world.frames[index];
    let covered = detector.covers(frame.cluster);
    frame_maps(&world.config, frame, covered, detector, index)
}

fn frame_maps(
    config: &WorldConfig,
    frame: &SyntheticFrame,
    covered: bool,
    detector: &SurrogateDetector,
    index: usize,
) -> ProbabilityStack {
    let (w, h) = (config.width, config.height);
    let k = config.branches.len();
    let mut data = vec![detector.background; w * h * k];
    let mut rng = rng_for(detector.seed ^ 0x5EED_0FDE_7EC7, index as u64);
    for obj in frame.objects() {
        let branch = map_box_to_branch(obj, &config.branches) - 1;
        let plane = &mut data[branch * w * h..(branch + 1) * w * h];
        if covered {
            paint_blob(plane, w, h, obj, detector);
        } else {
            paint_checker(plane, w, obj, detector, &mut rng);
        }
    }
    ProbabilityStack::new(frame.record.frame_id.clone(), w, h, k, 1, data)
        .expect("surrogate maps stay within [0,1]")
}

fn paint_blob(plane: &mut [f32], w: usize, h: usize, obj: &BoundingBox, det: &SurrogateDetector) {
    let (cx, cy) = (obj.x + obj.w / 2.0, obj.y + obj.h / 2.0);
    let (sx, sy) = (obj.w / 2.0, obj.h / 2.0);
    let x0 = (cx - 3.0 * sx).floor().max(0.0) as usize;
    let x1 = ((cx + 3.0 * sx).ceil() as usize).min(w - 1);
    let y0 = (cy - 3.0 * sy).floor().max(0.0) as usize;
    let y1 = ((cy + 3.0 * sy).ceil() as usize).min(h - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = (x as f64 + 0.5 - cx) / sx;
            let dy = (y as f64 + 0.5 - cy) / sy;
            let g = (-(dx * dx + dy * dy) / 2.0).exp() as f32;
            let p = det.background + (det.peak - det.background) * g;
            let cell = &mut plane[y * w + x];
            *cell = cell.max(p);
        }
    }
}

fn paint_checker(
    plane: &mut [f32],
    w: usize,
    obj: &BoundingBox,
    det: &SurrogateDetector,
    rng: &mut ChaCha8Rng,
) {
    let (x0, y0) = (obj.x as usize, obj.y as usize);
    let (x1, y1) = (x0 + obj.w as usize, y0 + obj.h as usize);
    for y in y0..y1 {
        for x in x0..x1 {
            let sign = if (x + y) % 2 == 0 { 1.0 } else { -1.0 };
            let jitter = if det.noise > 0.0 {
                rng.random_range(-det.noise..det.noise)
            } else {
                0.0
            };
            plane[y * w + x] = (0.5 + sign * det.checker_amplitude + jitter).clamp(0.0, 1.0);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub strategy: Strategy,
    pub aggregation: Aggregation,
    pub rules: Option<TemporalRuleConfig>,
    pub smoothing: Option<SmoothingConfig>,
    pub workers: Option<usize>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            strategy: Strategy::Proposed,
            aggregation: Aggregation::MaxpoolMean,
            rules: Some(TemporalRuleConfig::default()),
            smoothing: Some(SmoothingConfig::default()),
            workers: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleOutcome {
    pub cycle: u32,
    pub selected: usize,
    pub selected_instances: usize,
    pub cumulative_instances: usize,
    /// Fraction of clusters known to the detector after this cycle.
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub cycles: Vec<CycleOutcome>,
    pub final_coverage: f64,
    pub total_instances: usize,
    /// Fraction of world frames whose cluster is still unknown at the end.
    pub uncovered_frame_fraction: f64,
    pub selected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub strategy: Strategy,
    pub aggregation: Aggregation,
    pub runs: Vec<RunResult>,
    pub mean_coverage_by_cycle: Vec<f64>,
    pub mean_final_coverage: f64,
    pub mean_instances: f64,
    pub mean_uncovered_frame_fraction: f64,
}

impl SimulationReport {
    pub fn final_coverages(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.final_coverage).collect()
    }

    pub fn instance_counts(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.total_instances as f64).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            strategy: &'a str,
            aggregation: &'a str,
            seed: u64,
            cycle: u32,
            selected: usize,
            selected_instances: usize,
            cumulative_instances: usize,
            coverage: f64,
        }
        let strategy = enum_name(&self.strategy);
        let aggregation = enum_name(&self.aggregation);
        let mut w = csv::Writer::from_writer(out);
        for run in &self.runs {
            for c in &run.cycles {
                w.serialize(Row {
                    strategy: &strategy,
                    aggregation: &aggregation,
                    seed: run.seed,
                    cycle: c.cycle,
                    selected: c.selected,
                    selected_instances: c.selected_instances,
                    cumulative_instances: c.cumulative_instances,
                    coverage: c.coverage,
                })?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Runs the full cycle loop once per seed (seeds in parallel) and averages.
pub fn simulate(
    world: &SyntheticWorld,
    plan: &BudgetPlan,
    opts: &SimulationOptions,
    seeds: &[u64],
) -> Result<SimulationReport> {
    if plan.total() > world.frames.len() {
        return Err(Error::InvalidConfig(format!(
            "budget B={} exceeds the {} frames of the world",
            plan.total(),
            world.frames.len()
        )));
    }
    let runs = par_map(opts.workers, seeds, |&seed| run_once(world, plan, opts, seed))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = runs.len().max(1) as f64;
    let cycles = plan.cycles();
    let mean_coverage_by_cycle = (0..cycles)
        .map(|c| runs.iter().map(|r| r.cycles[c].coverage).sum::<f64>() / n)
        .collect();
    Ok(SimulationReport {
        strategy: opts.strategy,
        aggregation: opts.aggregation,
        mean_final_coverage: runs.iter().map(|r| r.final_coverage).sum::<f64>() / n,
        mean_instances: runs.iter().map(|r| r.total_instances as f64).sum::<f64>() / n,
        mean_uncovered_frame_fraction: runs.iter().map(|r| r.uncovered_frame_fraction).sum::<f64>() / n,
        mean_coverage_by_cycle,
        runs,
    })
}

fn run_once(
    world: &SyntheticWorld,
    plan: &BudgetPlan,
    opts: &SimulationOptions,
    seed: u64,
) -> Result<RunResult> {
    let config = &world.config;
    let catalog = world.records();
    let index: HashMap<&str, usize> = catalog
        .iter()
        .enumerate()
        .map(|(i, f)| (f.frame_id.as_str(), i))
        .collect();
    let mut detector = SurrogateDetector::new(config.initially_covered.iter().copied(), seed);
    let mut pool = PoolState::new(catalog.iter().map(|f| f.frame_id.clone()), seed);
    let mut pipeline = config.pipeline(ScoreMethod::Proposed);
    pipeline.aggregation.method = opts.aggregation;
    let method = opts.strategy.score_method();
    if let Some(m) = method {
        pipeline.score.method = m;
    }
    let cycle_opts = CycleOptions {
        strategy: opts.strategy,
        scenario: Scenario::Video,
        rules: opts.rules,
        smoothing: opts.smoothing,
        workers: Some(1),
    };
    // Image-level score of each frame when its cluster is unknown / known.
    let mut cache: [Vec<Option<f64>>; 2] = [vec![None; catalog.len()], vec![None; catalog.len()]];
    let mut cycles = Vec::with_capacity(plan.cycles());
    let mut cumulative = 0;
    for _ in 0..plan.cycles() {
        if method.is_some() {
            for id in &pool.unlabeled {
                let i = index[id.as_str()];
                let state = usize::from(detector.covers(world.frames[i].cluster));
                if cache[state][i].is_none() {
                    let stack = frame_maps(config, &world.frames[i], state == 1, &detector, i);
                    cache[state][i] = Some(pipeline.image_score(&stack)?);
                }
            }
        }
        let scorer = FnScorer(|f: &FrameRecord, _| {
            let i = index[f.frame_id.as_str()];
            let state = usize::from(detector.covers(world.frames[i].cluster));
            cache[state][i].ok_or_else(|| Error::MissingScore(f.frame_id.clone()))
        });
        let report = run_cycle(&mut pool, &catalog, &scorer, plan, &cycle_opts)?;
        let selected_instances: usize = report
            .selected
            .iter()
            .map(|id| world.frames[index[id.as_str()]].objects().len())
            .sum();
        for id in &report.selected {
            detector.covered.insert(world.frames[index[id.as_str()]].cluster);
        }
        cumulative += selected_instances;
        cycles.push(CycleOutcome {
            cycle: report.cycle,
            selected: report.selected.len(),
            selected_instances,
            cumulative_instances: cumulative,
            coverage: detector.covered.len() as f64 / config.num_clusters() as f64,
        });
    }
    let uncovered = world
        .frames
        .iter()
        .filter(|f| !detector.covers(f.cluster))
        .count();
    Ok(RunResult {
        seed,
        final_coverage: cycles.last().map_or(0.0, |c| c.coverage),
        total_instances: cumulative,
        uncovered_frame_fraction: uncovered as f64 / world.frames.len() as f64,
        selected: pool.labeled.iter().map(|l| l.frame_id.clone()).collect(),
        cycles,
    })
}

/// One-sided paired sign test of `treatment > control`. Ties are dropped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub positive: usize,
    pub negative: usize,
    pub ties: usize,
    pub p_value: f64,
}

pub fn paired_sign_test(treatment: &[f64], control: &[f64]) -> SignTest {
    assert_eq!(treatment.len(), control.len(), "paired samples differ in length");
    let (mut positive, mut negative, mut ties) = (0, 0, 0);
    for (a, b) in treatment.iter().zip(control) {
        match a.partial_cmp(b) {
            Some(std::cmp::Ordering::Greater) => positive += 1,
            Some(std::cmp::Ordering::Less) => negative += 1,
            _ => ties += 1,
        }
    }
    let n = positive + negative;
    // P(X >= positive), X ~ Binomial(n, 1/2).
    let p_value = if n == 0 {
        1.0
    } else {
        (positive..=n).map(|k| binomial(n, k)).sum::<f64>() / 2f64.powi(n as i32)
    };
    SignTest {
        positive,
        negative,
        ties,
        p_value,
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> WorldConfig {
        WorldConfig {
            num_videos: 4,
            frames_per_video: 50,
            ..Default::default()
        }
    }

    #[test]
    fn world_is_deterministic() {
        let cfg = small_config();
        assert_eq!(generate_world(&cfg).unwrap(), generate_world(&cfg).unwrap());
        let other = WorldConfig {
            seed: 7,
            ..small_config()
        };
        assert_ne!(generate_world(&cfg).unwrap(), generate_world(&other).unwrap());
    }

    #[test]
    fn skew_split_is_exact() {
        let cfg = WorldConfig {
            num_videos: 1,
            frames_per_video: 100,
            cluster_weights: vec![0.8, 0.2],
            cluster_density: vec![1.0, 1.0],
            initially_covered: vec![],
            ..Default::default()
        };
        let world = generate_world(&cfg).unwrap();
        assert_eq!(world.cluster_sizes(), vec![80, 20]);
    }

    #[test]
    fn single_cluster_world() {
        let cfg = WorldConfig {
            num_videos: 1,
            frames_per_video: 1,
            cluster_weights: vec![1.0],
            cluster_density: vec![1.0],
            ..Default::default()
        };
        let world = generate_world(&cfg).unwrap();
        assert_eq!(world.frames.len(), 1);
        assert_eq!(world.frames[0].cluster, 0);
    }

    #[test]
    fn largest_remainder_sums_to_total() {
        let cfg = WorldConfig {
            num_videos: 3,
            frames_per_video: 7,
            cluster_weights: vec![1.0, 1.0, 1.0],
            cluster_density: vec![1.0; 3],
            ..Default::default()
        };
        assert_eq!(cfg.cluster_sizes(), vec![7, 7, 7]);
        assert_eq!(WorldConfig::default().cluster_sizes(), vec![1860, 80, 40, 14, 6]);
    }

    #[test]
    fn config_validation() {
        assert!(WorldConfig {
            cluster_density: vec![1.0],
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(WorldConfig {
            initially_covered: vec![9],
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(WorldConfig {
            num_videos: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(serde_json::from_str::<WorldConfig>(r#"{"bogus": 1}"#).is_err());
        let partial: WorldConfig = serde_json::from_str(r#"{"seed": 5}"#).unwrap();
        assert_eq!(partial.seed, 5);
        assert_eq!(partial.num_videos, 20);
    }

    #[test]
    fn index_lookup() {
        let world = generate_world(&small_config()).unwrap();
        for i in [0, 49, 50, 199] {
            assert_eq!(world.index_of(&world.frames[i].record.frame_id), Some(i));
        }
        assert_eq!(world.index_of("nope"), None);
    }

    #[test]
    fn empty_covered_frame_scores_zero() {
        let cfg = WorldConfig {
            cluster_density: vec![0.0; 5],
            ..small_config()
        };
        let world = generate_world(&cfg).unwrap();
        let det = SurrogateDetector::new(0..5, 1);
        let map = cfg
            .pipeline(ScoreMethod::Proposed)
            .score_map(&surrogate_predict(&world, &det, 3))
            .unwrap();
        assert!(map.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sign_test_values() {
        let t = paired_sign_test(&[2.0, 2.0, 2.0, 1.0], &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!((t.positive, t.negative, t.ties), (3, 0, 1));
        assert!((t.p_value - 0.125).abs() < 1e-15);
        let all: Vec<f64> = vec![1.0; 20];
        let zeros: Vec<f64> = vec![0.0; 20];
        assert!((paired_sign_test(&all, &zeros).p_value - 2f64.powi(-20)).abs() < 1e-20);
        assert_eq!(paired_sign_test(&zeros, &zeros).p_value, 1.0);
        // 15 of 20: P(X >= 15) = 21700 / 2^20.
        let mixed: Vec<f64> = (0..20).map(|i| if i < 15 { 1.0 } else { -1.0 }).collect();
        assert!((paired_sign_test(&mixed, &zeros).p_value - 21700.0 / 1048576.0).abs() < 1e-15);
    }
}
