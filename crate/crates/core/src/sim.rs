//! Synthetic training-loop driver.
//!
//! A parametric learner stands in for the simulator and policy: each episode
//! on a clip yields a tracking error that decays with the number of times the
//! clip has been practised. Closing the loop through the scheduler and the
//! curriculum makes their dynamics observable without any RL.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::curriculum::{self, CurriculumConfig, CurriculumState, LevelMetrics};
use crate::error::{Error, Result};
use crate::motion::{MotionLibrary, MAX_DIFFICULTY, MIN_DIFFICULTY};
use crate::scheduler::{self, Observation, SchedulerConfig, SchedulerState};

/// Initial error per difficulty level, either as an affine function of the
/// level or as an explicit table for levels 1–10.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseError {
    Linear { intercept: f64, slope: f64 },
    Table(Vec<f64>),
}

impl BaseError {
    pub fn at(&self, level: u8) -> f64 {
        match self {
            BaseError::Linear { intercept, slope } => intercept + slope * f64::from(level),
            BaseError::Table(t) => t[usize::from(level.clamp(MIN_DIFFICULTY, MAX_DIFFICULTY) - 1)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerModel {
    pub base_error: BaseError,
    /// Fractional error decay per exposure.
    pub learn_rate: f64,
    pub noise_std: f64,
    /// Episodes with error at or above this fail.
    pub fail_threshold: f64,
}

impl Default for LearnerModel {
    fn default() -> Self {
        Self {
            base_error: BaseError::Linear {
                intercept: 0.0,
                slope: 0.05,
            },
            learn_rate: 0.02,
            noise_std: 0.01,
            fail_threshold: 0.3,
        }
    }
}

impl LearnerModel {
    pub fn validate(&self) -> Result<()> {
        if let BaseError::Table(t) = &self.base_error {
            if t.len() != usize::from(MAX_DIFFICULTY) {
                return Err(Error::Config(format!(
                    "base_error table needs {MAX_DIFFICULTY} entries, got {}",
                    t.len()
                )));
            }
        }
        let curve: Vec<f64> = (MIN_DIFFICULTY..=MAX_DIFFICULTY)
            .map(|l| self.base_error.at(l))
            .collect();
        if curve.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::Config(
                "base_error must be finite and nonnegative".into(),
            ));
        }
        if curve.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config(
                "base_error must be non-decreasing in level".into(),
            ));
        }
        // Zero is accepted so a no-learning control run can be expressed.
        if !(0.0..1.0).contains(&self.learn_rate) {
            return Err(Error::Config(format!(
                "learn_rate = {} must lie in [0, 1)",
                self.learn_rate
            )));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config("noise_std must be nonnegative".into()));
        }
        if !(self.fail_threshold.is_finite() && self.fail_threshold > 0.0) {
            return Err(Error::Config("fail_threshold must be positive".into()));
        }
        Ok(())
    }

    /// Noise-free error after `exposure` practice episodes.
    pub fn expected_error(&self, level: u8, exposure: u64) -> f64 {
        let decay = (1.0 - self.learn_rate).powf(exposure as f64);
        self.base_error.at(level) * decay
    }
}

/// One synthetic episode. Noise may push the raw value below zero; the
/// observed error is clamped at zero.
pub fn step_learner<R: rand::Rng + ?Sized>(
    model: &LearnerModel,
    level: u8,
    exposure: u64,
    rng: &mut R,
) -> (f64, bool) {
    let noise = if model.noise_std > 0.0 {
        Normal::new(0.0, model.noise_std)
            .expect("validated noise")
            .sample(rng)
    } else {
        0.0
    };
    let e = (model.expected_error(level, exposure) + noise).max(0.0);
    (e, e < model.fail_threshold)
}

/// The clip names and difficulty levels the harness schedules over.
#[derive(Clone, Debug, PartialEq)]
pub struct ClipRoster {
    pub names: Vec<String>,
    pub levels: Vec<u8>,
}

impl ClipRoster {
    pub fn new(names: Vec<String>, levels: Vec<u8>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidArgument(
                "roster needs at least one clip".into(),
            ));
        }
        if names.len() != levels.len() {
            return Err(Error::dim("roster levels", names.len(), levels.len()));
        }
        if let Some(l) = levels
            .iter()
            .find(|l| !(MIN_DIFFICULTY..=MAX_DIFFICULTY).contains(*l))
        {
            return Err(Error::InvalidArgument(format!("level {l} outside 1..=10")));
        }
        Ok(Self { names, levels })
    }

    /// Clips named `clip_000`, `clip_001`, ... with the given levels.
    pub fn synthetic(levels: &[u8]) -> Result<Self> {
        let names = (0..levels.len()).map(|i| format!("clip_{i:03}")).collect();
        Self::new(names, levels.to_vec())
    }

    pub fn from_library(lib: &MotionLibrary<f64>) -> Result<Self> {
        Self::new(lib.names(), lib.difficulties())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Adaptive,
    Uniform,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSet {
    /// Only the levels that have clips.
    #[default]
    Present,
    /// Every level 1–10, including empty ones.
    Full,
}

fn default_true() -> bool {
    true
}

fn default_angle_scale() -> f64 {
    2.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub iterations: u64,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub sampling: SamplingMode,
    #[serde(default = "default_true")]
    pub curriculum: bool,
    #[serde(default)]
    pub levels: LevelSet,
    /// Converts the position-error proxy into the angle-error proxy the
    /// curriculum compares against its angular threshold.
    #[serde(default = "default_angle_scale")]
    pub angle_scale: f64,
}

impl RunSettings {
    pub fn new(iterations: u64, batch_size: usize, seed: u64) -> Self {
        Self {
            iterations,
            batch_size,
            seed,
            sampling: SamplingMode::Adaptive,
            curriculum: true,
            levels: LevelSet::Present,
            angle_scale: default_angle_scale(),
        }
    }
}

/// Synthetic clip set declared in a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticLibrary {
    pub levels: Vec<u8>,
}

/// Everything a run depends on besides the clip set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub run: RunSettings,
    #[serde(default)]
    pub scheduler: SchedulerConfig<f64>,
    #[serde(default)]
    pub curriculum: CurriculumConfig<f64>,
    #[serde(default)]
    pub learner: LearnerModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub library: Option<SyntheticLibrary>,
}

impl SimConfig {
    pub fn new(run: RunSettings) -> Self {
        Self {
            run,
            scheduler: SchedulerConfig::default(),
            curriculum: CurriculumConfig::default(),
            learner: LearnerModel::default(),
            library: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.run.angle_scale.is_finite() && self.run.angle_scale >= 0.0) {
            return Err(Error::Config("angle_scale must be nonnegative".into()));
        }
        self.scheduler.validate()?;
        self.curriculum.validate()?;
        self.learner.validate()
    }

    /// The configured synthetic clip set, if any.
    pub fn roster(&self) -> Option<Result<ClipRoster>> {
        self.library
            .as_ref()
            .map(|l| ClipRoster::synthetic(&l.levels))
    }
}

/// What happened in one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    /// Sampled clip indices in draw order.
    pub sampled: Vec<usize>,
    /// Per-clip EMA error after the update.
    pub error: Vec<f64>,
    /// Per-clip difficulty score after the update.
    pub score: Vec<f64>,
    /// Per-clip scheduler probability the batch was drawn against.
    pub sched_prob: Vec<f64>,
    /// Per-clip effective probability the batch was drawn from.
    pub prob: Vec<f64>,
    /// Frontier level in force while the batch was drawn.
    pub l_max: u8,
    /// Effective sampling mass per present level.
    pub level_mass: BTreeMap<u8, f64>,
    /// Mean EMA error over clips with at least one observation.
    pub mpjpe_proxy: f64,
    pub advanced: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub names: Vec<String>,
    pub levels: Vec<u8>,
    pub records: Vec<IterationRecord>,
    /// Frontier after the last iteration.
    pub final_l_max: u8,
    pub final_error: Vec<f64>,
    pub exposures: Vec<u64>,
    pub final_scheduler: SchedulerState<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn level_metrics(
    state: &SchedulerState<f64>,
    levels: &[u8],
    angle_scale: f64,
) -> BTreeMap<u8, LevelMetrics<f64>> {
    let mut sums: BTreeMap<u8, (f64, usize)> = BTreeMap::new();
    for (st, l) in state.stats().iter().zip(levels) {
        if st.initialized {
            let e = sums.entry(*l).or_insert((0.0, 0));
            e.0 += st.error;
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(l, (s, n))| {
            let m = s / n as f64;
            (
                l,
                LevelMetrics {
                    mpjpe: m,
                    mpjae: angle_scale * m,
                },
            )
        })
        .collect()
}

/// Runs the closed loop for `cfg.run.iterations` iterations. The result is a
/// pure function of the roster and the configuration.
pub fn run(roster: &ClipRoster, cfg: &SimConfig) -> Result<RunLog> {
    cfg.validate()?;
    let n = roster.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let mut sched = SchedulerState::<f64>::new(roster.names.clone())?;
    let mut curr = match cfg.run.levels {
        LevelSet::Present => CurriculumState::new(&roster.levels)?,
        LevelSet::Full => CurriculumState::full_scale(),
    };
    let mut exposures = vec![0u64; n];
    let mut records = Vec::with_capacity(cfg.run.iterations as usize);
    let uniform = vec![1.0 / n as f64; n];

    for iteration in 0..cfg.run.iterations {
        let sched_prob = sched.sampling_distribution(&cfg.scheduler);
        let base = match cfg.run.sampling {
            SamplingMode::Adaptive => &sched_prob,
            SamplingMode::Uniform => &uniform,
        };
        let prob = if cfg.run.curriculum {
            curriculum::effective_weights(base, &roster.levels, &curr, &cfg.curriculum)?
        } else {
            base.clone()
        };
        let sampled = scheduler::sample_indices(&prob, cfg.run.batch_size, &mut rng)?;
        let batch: Vec<Observation<f64>> = sampled
            .iter()
            .map(|&i| {
                let (error, success) =
                    step_learner(&cfg.learner, roster.levels[i], exposures[i], &mut rng);
                exposures[i] += 1;
                Observation {
                    clip: i,
                    error,
                    success,
                }
            })
            .collect();
        sched.apply_batch(&batch, &cfg.scheduler)?;

        let l_max = curr.l_max();
        let mut advanced = false;
        if cfg.run.curriculum {
            let metrics = level_metrics(&sched, &roster.levels, cfg.run.angle_scale);
            let (next, reason) = curriculum::tick(&curr, &cfg.curriculum, &metrics);
            advanced = next.l_max() != l_max;
            if advanced {
                debug!(
                    "iteration {iteration}: frontier {l_max} -> {} ({reason})",
                    next.l_max()
                );
            }
            curr = next;
        }

        let stats = sched.stats();
        records.push(IterationRecord {
            iteration,
            error: stats.iter().map(|s| s.error).collect(),
            score: sched.difficulty_scores(&cfg.scheduler),
            level_mass: curriculum::level_masses(&prob, &roster.levels),
            mpjpe_proxy: mean(stats.iter().filter(|s| s.initialized).map(|s| s.error))
                .unwrap_or(0.0),
            sampled,
            sched_prob,
            prob,
            l_max,
            advanced,
        });
    }

    let final_error = sched
        .stats()
        .iter()
        .zip(&roster.levels)
        .map(|(s, l)| {
            if s.initialized {
                s.error
            } else {
                cfg.learner.base_error.at(*l)
            }
        })
        .collect();
    Ok(RunLog {
        names: roster.names.clone(),
        levels: roster.levels.clone(),
        records,
        final_l_max: curr.l_max(),
        final_error,
        exposures,
        final_scheduler: sched,
    })
}

impl RunLog {
    /// Largest final per-clip error; clips never observed count at their
    /// level's base error.
    pub fn final_max_error(&self) -> f64 {
        self.final_error.iter().copied().fold(0.0, f64::max)
    }

    pub fn final_mean_error(&self) -> f64 {
        mean(self.final_error.iter().copied()).unwrap_or(0.0)
    }

    /// One row per iteration: `iteration,l_max,advanced,batch,mpjpe_proxy`
    /// followed by one `mass_L` column per present level.
    pub fn write_iterations_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut present: Vec<u8> = self.levels.clone();
        present.sort_unstable();
        present.dedup();
        let mut header = vec![
            "iteration".to_string(),
            "l_max".into(),
            "advanced".into(),
            "batch".into(),
            "mpjpe_proxy".into(),
        ];
        header.extend(present.iter().map(|l| format!("mass_{l}")));
        out.write_record(&header)?;
        for r in &self.records {
            let batch: Vec<String> = r.sampled.iter().map(|i| i.to_string()).collect();
            let mut row = vec![
                r.iteration.to_string(),
                r.l_max.to_string(),
                u8::from(r.advanced).to_string(),
                batch.join(" "),
                format!("{:.6}", r.mpjpe_proxy),
            ];
            row.extend(
                present
                    .iter()
                    .map(|l| format!("{:.6}", r.level_mass.get(l).copied().unwrap_or(0.0))),
            );
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// Long form, one row per iteration and clip:
    /// `iteration,clip,level,error,score,sched_prob,prob`.
    pub fn write_clips_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "iteration",
            "clip",
            "level",
            "error",
            "score",
            "sched_prob",
            "prob",
        ])?;
        for r in &self.records {
            for (i, name) in self.names.iter().enumerate() {
                out.write_record([
                    r.iteration.to_string(),
                    name.clone(),
                    self.levels[i].to_string(),
                    format!("{:.6}", r.error[i]),
                    format!("{:.6}", r.score[i]),
                    format!("{:.6}", r.sched_prob[i]),
                    format!("{:.6}", r.prob[i]),
                ])?;
            }
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// Writes `iterations.csv` and `clips.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (file, which) in [("iterations.csv", 0), ("clips.csv", 1)] {
            let path = dir.join(file);
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let w = io::BufWriter::new(f);
            if which == 0 {
                self.write_iterations_csv(w)?;
            } else {
                self.write_clips_csv(w)?;
            }
        }
        Ok(())
    }

    /// Violated run invariants, empty when the run is healthy.
    pub fn check_invariants(&self, cfg: &SimConfig) -> Vec<String> {
        const TOL: f64 = 1e-9;
        let mut out = Vec::new();
        let n = self.names.len() as f64;
        let mut prev = 0u8;
        for r in &self.records {
            if r.l_max < prev {
                out.push(format!(
                    "iteration {}: l_max decreased {prev} -> {}",
                    r.iteration, r.l_max
                ));
            }
            if r.l_max > MAX_DIFFICULTY {
                out.push(format!(
                    "iteration {}: l_max {} above {MAX_DIFFICULTY}",
                    r.iteration, r.l_max
                ));
            }
            prev = r.l_max;
            let total: f64 = r.prob.iter().sum();
            if (total - 1.0).abs() > TOL {
                out.push(format!(
                    "iteration {}: probabilities sum to {total}",
                    r.iteration
                ));
            }
            let sched_total: f64 = r.sched_prob.iter().sum();
            if (sched_total - 1.0).abs() > TOL {
                out.push(format!(
                    "iteration {}: scheduler probabilities sum to {sched_total}",
                    r.iteration
                ));
            }
            let floor = cfg.scheduler.eps_explore / n;
            if let Some((i, p)) = r
                .sched_prob
                .iter()
                .enumerate()
                .find(|(_, p)| **p < floor - 1e-12)
            {
                out.push(format!(
                    "iteration {}: clip {i} probability {p} below {floor}",
                    r.iteration
                ));
            }
            if cfg.run.curriculum {
                let levels_present =
                    r.level_mass.iter().filter(|(l, _)| **l <= r.l_max).count() as f64;
                let min = cfg.curriculum.min_level_ratio;
                if min * levels_present <= 1.0 {
                    for (l, m) in r.level_mass.iter().filter(|(l, _)| **l <= r.l_max) {
                        if *m < min - TOL {
                            out.push(format!(
                                "iteration {}: level {l} mass {m} below {min}",
                                r.iteration
                            ));
                        }
                    }
                }
                for (l, m) in r.level_mass.iter().filter(|(l, _)| **l > r.l_max) {
                    if *m != 0.0 {
                        out.push(format!(
                            "iteration {}: locked level {l} has mass {m}",
                            r.iteration
                        ));
                    }
                }
            }
        }
        if self.final_l_max < prev {
            out.push(format!(
                "final l_max {} below last logged {prev}",
                self.final_l_max
            ));
        }
        out
    }
}

/// Final errors of an adaptive and a uniform run sharing a seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedComparison {
    pub seed: u64,
    pub adaptive_max: f64,
    pub adaptive_mean: f64,
    pub uniform_max: f64,
    pub uniform_mean: f64,
}

impl SeedComparison {
    pub fn adaptive_wins(&self) -> bool {
        self.adaptive_max < self.uniform_max
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<SeedComparison>,
}

impl ComparisonReport {
    /// Fraction of seeds where adaptive sampling ends with a strictly lower
    /// max per-clip error.
    pub fn adaptive_win_rate(&self) -> f64 {
        let wins = self.rows.iter().filter(|r| r.adaptive_wins()).count();
        wins as f64 / self.rows.len() as f64
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "seed",
            "adaptive_max",
            "adaptive_mean",
            "uniform_max",
            "uniform_mean",
            "adaptive_wins",
        ])?;
        for r in &self.rows {
            out.write_record([
                r.seed.to_string(),
                format!("{:.6}", r.adaptive_max),
                format!("{:.6}", r.adaptive_mean),
                format!("{:.6}", r.uniform_max),
                format!("{:.6}", r.uniform_mean),
                u8::from(r.adaptive_wins()).to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Runs every seed once with adaptive and once with uniform sampling, all
/// other settings taken from `cfg`.
pub fn compare_uniform(
    roster: &ClipRoster,
    cfg: &SimConfig,
    seeds: &[u64],
) -> Result<ComparisonReport> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument(
            "comparison needs at least two seeds".into(),
        ));
    }
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut a = cfg.clone();
        a.run.seed = seed;
        a.run.sampling = SamplingMode::Adaptive;
        let mut u = a.clone();
        u.run.sampling = SamplingMode::Uniform;
        let (ra, ru) = (run(roster, &a)?, run(roster, &u)?);
        rows.push(SeedComparison {
            seed,
            adaptive_max: ra.final_max_error(),
            adaptive_mean: ra.final_mean_error(),
            uniform_max: ru.final_max_error(),
            uniform_mean: ru.final_mean_error(),
        });
    }
    Ok(ComparisonReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> LearnerModel {
        LearnerModel {
            noise_std: 0.0,
            ..LearnerModel::default()
        }
    }

    #[test]
    fn learner_limits() {
        let m = quiet();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(step_learner(&m, 4, 0, &mut rng), (0.2, true));
        let (e, ok) = step_learner(&m, 10, 5000, &mut rng);
        assert!(e < 1e-12 && ok);
        assert_eq!(step_learner(&m, 10, 0, &mut rng), (0.5, false));
    }

    #[test]
    fn learner_is_seeded() {
        let m = LearnerModel::default();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|k| step_learner(&m, 3, k, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn learner_validation() {
        let mut m = LearnerModel {
            base_error: BaseError::Linear {
                intercept: 0.5,
                slope: -0.01,
            },
            ..LearnerModel::default()
        };
        assert!(m.validate().is_err());
        m.base_error = BaseError::Table(vec![0.1; 3]);
        assert!(m.validate().is_err());
        let m = LearnerModel {
            learn_rate: 1.0,
            ..LearnerModel::default()
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn zero_iterations() {
        let roster = ClipRoster::synthetic(&[1, 2, 3]).unwrap();
        let log = run(&roster, &SimConfig::new(RunSettings::new(0, 4, 1))).unwrap();
        assert!(log.records.is_empty());
        assert_eq!(log.final_l_max, 1);
    }

    #[test]
    fn single_level_library_advances_on_full_scale() {
        let roster = ClipRoster::synthetic(&[1; 5]).unwrap();
        let mut cfg = SimConfig::new(RunSettings::new(200, 4, 11));
        cfg.run.levels = LevelSet::Full;
        cfg.curriculum.theta_pos = 10.0;
        cfg.curriculum.theta_ang = 10.0;
        cfg.curriculum.auto_advance_iters = 100;
        let log = run(&roster, &cfg).unwrap();
        let first = log
            .records
            .iter()
            .position(|r| r.advanced)
            .expect("advanced");
        assert!(first < 100);
        assert!(log.final_l_max >= 2);
        assert!(log.check_invariants(&cfg).is_empty());
    }

    #[test]
    fn missing_run_key_is_named() {
        let err = SimConfig::parse("[run]\nbatch_size = 2\nseed = 1\n").unwrap_err();
        assert!(err.to_string().contains("iterations"), "{err}");
        let err = SimConfig::parse("[scheduler]\nalpha = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("run"), "{err}");
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = SimConfig::new(RunSettings::new(10, 2, 5));
        cfg.library = Some(SyntheticLibrary { levels: vec![1, 2] });
        assert_eq!(SimConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn single_clip_schedules_match() {
        let roster = ClipRoster::synthetic(&[3]).unwrap();
        let cfg = SimConfig::new(RunSettings::new(50, 2, 0));
        let report = compare_uniform(&roster, &cfg, &[1, 2]).unwrap();
        for r in &report.rows {
            assert_eq!(r.adaptive_max, r.uniform_max);
        }
    }
}
