use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use log::info;
use serde::de::DeserializeOwned;

use super::{
    AngleMode, Baseline, ConfigKind, ExportArgs, InspectArgs, LossArgs, MetricsArgs, QuantizeArgs,
    RewardArgs, RunSimArgs,
};
use crate::curriculum::{rating_to_band, Band};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{per_level_report, AngleErrorMode, LabeledPair, TrajectoryPair};
use crate::motion::{
    load_library, read_clip, LibraryConfig, MotionClip, MotionLibrary, CLIP_EXTENSION,
    MANIFEST_FILE,
};
use crate::observation;
use crate::reward::{task_rewards, BodyStatePair, RewardConfig};
use crate::sim::{self, ClipRoster, SimConfig, SyntheticLibrary};
use crate::tokenizer::{
    quantize as quantize_latents, vqvae_loss, Codebook, LossWeights, MotionTensor,
};

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
}

fn print(s: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(s.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct InspectSummary {
    pub clips: usize,
    pub per_level: BTreeMap<u8, usize>,
    pub per_band: BTreeMap<Band, usize>,
    pub total_duration: f64,
    pub total_frames: usize,
}

pub fn inspect_summary(lib: &MotionLibrary<f64>) -> Result<InspectSummary> {
    let mut per_level = BTreeMap::new();
    let mut per_band: BTreeMap<Band, usize> = [Band::Low, Band::Mid, Band::High]
        .into_iter()
        .map(|b| (b, 0))
        .collect();
    for c in lib.clips() {
        *per_level.entry(c.difficulty).or_insert(0) += 1;
        *per_band.entry(rating_to_band(c.difficulty)?).or_insert(0) += 1;
    }
    Ok(InspectSummary {
        clips: lib.len(),
        per_level,
        per_band,
        total_duration: lib.clips().iter().map(|c| c.duration()).sum(),
        total_frames: lib.clips().iter().map(|c| c.len()).sum(),
    })
}

impl InspectSummary {
    pub fn render(&self) -> String {
        let mut s = format!("{} clips\n", self.clips);
        s.push_str(&format!(
            "{} frames, {:.6} s total\n",
            self.total_frames, self.total_duration
        ));
        for (level, n) in &self.per_level {
            s.push_str(&format!("level {level}: {n}\n"));
        }
        let band = |b| self.per_band.get(&b).copied().unwrap_or(0);
        s.push_str(&format!(
            "bands 1-4/5-7/8-10: {}/{}/{}\n",
            band(Band::Low),
            band(Band::Mid),
            band(Band::High)
        ));
        s
    }
}

pub(super) fn inspect(a: &InspectArgs) -> Result<ExitCode> {
    let lib: MotionLibrary<f64> = load_library(&a.library, &LibraryConfig::default())?;
    print(&inspect_summary(&lib)?.render())?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| a.library.join(MANIFEST_FILE));
    write_file(&out, lib.manifest().as_bytes())?;
    info!("manifest written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

pub(super) fn run_sim(a: &RunSimArgs) -> Result<ExitCode> {
    let mut cfg = SimConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.run.seed = seed;
    }
    if let Some(it) = a.iterations {
        cfg.run.iterations = it;
    }
    let roster = match (&a.library, cfg.roster()) {
        (Some(dir), _) => ClipRoster::from_library(&load_library(dir, &LibraryConfig::default())?)?,
        (None, Some(r)) => r?,
        (None, None) => {
            return Err(Error::Config(
                "no clips: pass --library or add a [library] section with `levels`".into(),
            ))
        }
    };
    let log = sim::run(&roster, &cfg)?;
    if let Some(dir) = &a.out {
        log.save(dir)?;
        info!("run log written to {}", dir.display());
    }
    let mut s = String::new();
    s.push_str(&format!("iterations: {}\n", log.records.len()));
    s.push_str(&format!("final l_max: {}\n", log.final_l_max));
    s.push_str(&format!("mean EMA error: {:.6}\n", log.final_mean_error()));
    s.push_str(&format!("max EMA error: {:.6}\n", log.final_max_error()));

    if a.baseline == Some(Baseline::Uniform) {
        let seeds: Vec<u64> = (0..a.seeds).map(|k| cfg.run.seed + k).collect();
        let report = sim::compare_uniform(&roster, &cfg, &seeds)?;
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        if let Some(dir) = &a.out {
            write_file(&dir.join("comparison.csv"), &buf)?;
        }
        s.push_str("comparison against uniform sampling:\n");
        s.push_str(&String::from_utf8_lossy(&buf));
        s.push_str(&format!(
            "adaptive win rate: {:.6}\n",
            report.adaptive_win_rate()
        ));
    }
    print(&s)?;

    let violations = log.check_invariants(&cfg);
    if violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            eprintln!("invariant violated: {v}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn load_robot_clip(path: &Path) -> Result<MotionClip<f64>> {
    let clip = read_clip(path, &LibraryConfig::default())?;
    if clip.robot_frames().is_none() {
        return Err(Error::InvalidArgument(format!(
            "{} is not a robot clip",
            path.display()
        )));
    }
    Ok(clip)
}

pub(super) fn metrics(a: &MetricsArgs) -> Result<ExitCode> {
    let reference = load_robot_clip(&a.reference)?;
    let actual = load_robot_clip(&a.actual)?;
    let pair = TrajectoryPair::new(
        reference.robot_frames().expect("robot clip"),
        actual.robot_frames().expect("robot clip"),
    )?;
    let mode = match a.angle_mode {
        AngleMode::Joint => AngleErrorMode::JointAngle,
        AngleMode::Body => AngleErrorMode::BodyOrientation,
    };
    let report = per_level_report(
        &[LabeledPair {
            name: &reference.name,
            level: reference.difficulty,
            pair,
        }],
        mode,
    );
    let m = report.overall;
    print(&format!(
        "mpjpe {:.6}\nmpjae {:.6}\nmpjve {:.6}\n",
        m.mpjpe, m.mpjae, m.mpjve
    ))?;
    if let Some(out) = &a.out {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write_file(out, &buf)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub(super) fn reward(a: &RewardArgs) -> Result<ExitCode> {
    let cfg: RewardConfig<f64> = match &a.config {
        Some(p) => load_toml(p)?,
        None => RewardConfig::default(),
    };
    cfg.validate()?;
    let reference = load_robot_clip(&a.reference)?;
    let actual = load_robot_clip(&a.actual)?;
    let (rf, af) = (
        reference.robot_frames().expect("robot"),
        actual.robot_frames().expect("robot"),
    );
    if rf.len() != af.len() {
        return Err(Error::dim("actual frames", rf.len(), af.len()));
    }
    let frames: Vec<usize> = match a.frame {
        Some(t) if t < rf.len() => vec![t],
        Some(t) => {
            return Err(Error::InvalidArgument(format!(
                "frame {t} beyond clip of {}",
                rf.len()
            )))
        }
        None => (0..rf.len()).collect(),
    };
    let mut sums = [0.0; 6];
    let mut names = [""; 6];
    for &t in &frames {
        let terms = task_rewards(&BodyStatePair::new(&rf[t], &af[t])?, &cfg)?;
        for (k, (name, v)) in terms.named().into_iter().enumerate() {
            sums[k] += v;
            names[k] = name;
        }
    }
    let n = frames.len() as f64;
    let mut s = String::new();
    for (name, v) in names.iter().zip(&sums) {
        s.push_str(&format!("{name} {:.6}\n", v / n));
    }
    s.push_str(&format!("total {:.6}\n", sums.iter().sum::<f64>() / n));
    print(&s)?;
    Ok(ExitCode::SUCCESS)
}

fn load_motion(path: &Path) -> Result<(MotionTensor<f64>, Option<f64>)> {
    if path.extension().is_some_and(|e| e == CLIP_EXTENSION) {
        let clip = read_clip(path, &LibraryConfig::default())?;
        Ok((MotionTensor::from_clip(&clip)?, Some(clip.fps)))
    } else {
        Ok((MotionTensor::new(Matrix::load(path)?)?, None))
    }
}

pub(super) fn loss(a: &LossArgs) -> Result<ExitCode> {
    let weights: LossWeights<f64> = match &a.config {
        Some(p) => load_toml(p)?,
        None => LossWeights::default(),
    };
    let (gt, gt_fps) = load_motion(&a.ground_truth)?;
    let (recon, _) = load_motion(&a.reconstruction)?;
    let fps = a.fps.or(gt_fps).unwrap_or(1.0);
    let l = vqvae_loss(&gt, &recon, a.commit, fps, &weights)?;
    let mut s = String::new();
    for (name, v) in l.terms.named() {
        s.push_str(&format!("{name} {v:.6}\n"));
    }
    s.push_str(&format!("total {:.6}\n", l.total));
    print(&s)?;
    Ok(ExitCode::SUCCESS)
}

pub(super) fn quantize(a: &QuantizeArgs) -> Result<ExitCode> {
    let codebook = Codebook::<f64>::load(&a.codebook)?;
    let latents = Matrix::<f64>::load(&a.latents)?;
    let q = quantize_latents(&latents, &codebook)?;
    let idx: Vec<String> = q.indices.iter().map(|i| i.to_string()).collect();
    print(&format!(
        "indices {}\ncommit {:.6}\n",
        idx.join(" "),
        q.commit_sq_dist
    ))?;
    Ok(ExitCode::SUCCESS)
}

pub(super) fn export_config(a: &ExportArgs) -> Result<ExitCode> {
    let text = match a.kind {
        ConfigKind::Sim => {
            let mut cfg = SimConfig::new(sim::RunSettings::new(2000, 16, 0));
            cfg.library = Some(SyntheticLibrary {
                levels: vec![1, 1, 2, 2, 3, 3, 4, 5, 6, 7],
            });
            cfg.to_toml()
        }
        ConfigKind::Reward => toml::to_string(&RewardConfig::<f64>::default()).expect("serializes"),
        ConfigKind::Loss => toml::to_string(&LossWeights::<f64>::default()).expect("serializes"),
        ConfigKind::Observation => observation::offset_manifest(),
    };
    match &a.out {
        Some(p) => write_file(p, text.as_bytes())?,
        None => print(&text)?,
    }
    Ok(ExitCode::SUCCESS)
}
