//! Joint-level tracking metrics in world coordinates.
//!
//! * MPJPE: mean Euclidean distance between body positions (m).
//! * MPJAE: mean absolute joint-angle difference (rad), or optionally the mean
//!   geodesic angle between body orientations.
//! * MPJVE: mean absolute joint-velocity difference (rad/s).
//!
//! Aggregates pool every (frame, element) sample, so a level or report mean is
//! weighted by sample count rather than averaging per-clip means.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, geodesic_angle};
use crate::motion::RobotFrame;
use crate::num::{Real, RunningMean};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleErrorMode {
    #[default]
    JointAngle,
    BodyOrientation,
}

/// Equal-length reference and actual trajectories.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryPair<'a, T> {
    pub reference: &'a [RobotFrame<T>],
    pub actual: &'a [RobotFrame<T>],
}

impl<'a, T: Real> TrajectoryPair<'a, T> {
    pub fn new(reference: &'a [RobotFrame<T>], actual: &'a [RobotFrame<T>]) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::InvalidArgument(
                "trajectories must have at least one frame".into(),
            ));
        }
        if reference.len() != actual.len() {
            return Err(Error::dim("actual frames", reference.len(), actual.len()));
        }
        for (t, (r, a)) in reference.iter().zip(actual).enumerate() {
            if r.n_bodies() != a.n_bodies() || r.body_quat.len() != a.body_quat.len() {
                return Err(Error::dim(
                    format!("frame {t} bodies"),
                    r.n_bodies(),
                    a.n_bodies(),
                ));
            }
            if r.joint_pos.len() != a.joint_pos.len() {
                return Err(Error::dim(
                    format!("frame {t} joint_pos"),
                    r.joint_pos.len(),
                    a.joint_pos.len(),
                ));
            }
            if r.joint_vel.len() != a.joint_vel.len() {
                return Err(Error::dim(
                    format!("frame {t} joint_vel"),
                    r.joint_vel.len(),
                    a.joint_vel.len(),
                ));
            }
        }
        Ok(Self { reference, actual })
    }

    fn frames(&self) -> impl Iterator<Item = (&RobotFrame<T>, &RobotFrame<T>)> {
        self.reference.iter().zip(self.actual)
    }

    fn position_samples(&self) -> RunningMean<T> {
        self.frames()
            .flat_map(|(r, a)| {
                r.body_pos
                    .iter()
                    .zip(&a.body_pos)
                    .map(|(p, q)| geometry::norm(geometry::sub(*p, *q)))
            })
            .collect()
    }

    fn angle_samples(&self, mode: AngleErrorMode) -> RunningMean<T> {
        match mode {
            AngleErrorMode::JointAngle => self
                .frames()
                .flat_map(|(r, a)| {
                    r.joint_pos
                        .iter()
                        .zip(&a.joint_pos)
                        .map(|(x, y)| (*x - *y).abs())
                })
                .collect(),
            AngleErrorMode::BodyOrientation => self
                .frames()
                .flat_map(|(r, a)| {
                    r.body_quat
                        .iter()
                        .zip(&a.body_quat)
                        .map(|(p, q)| geodesic_angle(*p, *q))
                })
                .collect(),
        }
    }

    fn velocity_samples(&self) -> RunningMean<T> {
        self.frames()
            .flat_map(|(r, a)| {
                r.joint_vel
                    .iter()
                    .zip(&a.joint_vel)
                    .map(|(x, y)| (*x - *y).abs())
            })
            .collect()
    }
}

pub fn mpjpe<T: Real>(pair: &TrajectoryPair<'_, T>) -> T {
    pair.position_samples().mean().unwrap_or_else(T::zero)
}

pub fn mpjae<T: Real>(pair: &TrajectoryPair<'_, T>) -> T {
    mpjae_with(pair, AngleErrorMode::JointAngle)
}

pub fn mpjae_with<T: Real>(pair: &TrajectoryPair<'_, T>, mode: AngleErrorMode) -> T {
    pair.angle_samples(mode).mean().unwrap_or_else(T::zero)
}

pub fn mpjve<T: Real>(pair: &TrajectoryPair<'_, T>) -> T {
    pair.velocity_samples().mean().unwrap_or_else(T::zero)
}

/// Sample-pooled accumulators of the three metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricAccumulator<T> {
    pub position: RunningMean<T>,
    pub angle: RunningMean<T>,
    pub velocity: RunningMean<T>,
}

impl<T: Real> Default for MetricAccumulator<T> {
    fn default() -> Self {
        Self {
            position: RunningMean::default(),
            angle: RunningMean::default(),
            velocity: RunningMean::default(),
        }
    }
}

impl<T: Real> MetricAccumulator<T> {
    pub fn from_pair(pair: &TrajectoryPair<'_, T>, mode: AngleErrorMode) -> Self {
        Self {
            position: pair.position_samples(),
            angle: pair.angle_samples(mode),
            velocity: pair.velocity_samples(),
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.position.merge(&other.position);
        self.angle.merge(&other.angle);
        self.velocity.merge(&other.velocity);
    }

    pub fn summary(&self) -> MetricSummary<T> {
        MetricSummary {
            mpjpe: self.position.mean().unwrap_or_else(T::zero),
            mpjae: self.angle.mean().unwrap_or_else(T::zero),
            mpjve: self.velocity.mean().unwrap_or_else(T::zero),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSummary<T> {
    pub mpjpe: T,
    pub mpjae: T,
    pub mpjve: T,
}

/// A trajectory pair tagged with its clip name and difficulty level.
#[derive(Clone, Copy, Debug)]
pub struct LabeledPair<'a, T> {
    pub name: &'a str,
    pub level: u8,
    pub pair: TrajectoryPair<'a, T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport<T> {
    pub overall: MetricSummary<T>,
    pub per_level: BTreeMap<u8, MetricSummary<T>>,
    /// `(name, level, metrics)` in input order.
    pub per_clip: Vec<(String, u8, MetricSummary<T>)>,
}

/// Per-clip, per-level and overall metrics. Levels without pairs are simply
/// absent from the report.
pub fn per_level_report<T: Real>(
    pairs: &[LabeledPair<'_, T>],
    mode: AngleErrorMode,
) -> MetricReport<T> {
    let mut overall = MetricAccumulator::default();
    let mut levels: BTreeMap<u8, MetricAccumulator<T>> = BTreeMap::new();
    let mut per_clip = Vec::with_capacity(pairs.len());
    for lp in pairs {
        let acc = MetricAccumulator::from_pair(&lp.pair, mode);
        per_clip.push((lp.name.to_string(), lp.level, acc.summary()));
        levels.entry(lp.level).or_default().merge(&acc);
        overall.merge(&acc);
    }
    MetricReport {
        overall: overall.summary(),
        per_level: levels.into_iter().map(|(l, a)| (l, a.summary())).collect(),
        per_clip,
    }
}

impl<T: Real> MetricReport<T> {
    /// CSV with columns `scope,name,level,mpjpe,mpjae,mpjve`, six decimals.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["scope", "name", "level", "mpjpe", "mpjae", "mpjve"])?;
        let row = |scope: &str, name: &str, level: String, m: &MetricSummary<T>| {
            vec![
                scope.to_string(),
                name.to_string(),
                level,
                format!("{:.6}", m.mpjpe),
                format!("{:.6}", m.mpjae),
                format!("{:.6}", m.mpjve),
            ]
        };
        for (name, level, m) in &self.per_clip {
            out.write_record(row("clip", name, level.to_string(), m))?;
        }
        for (level, m) in &self.per_level {
            out.write_record(row("level", "", level.to_string(), m))?;
        }
        out.write_record(row("overall", "", String::new(), &self.overall))?;
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// Plain-text table in the usual tracking-evaluation layout.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<24} {:>10} {:>10} {:>12}",
            "", "MPJPE (m)", "MPJAE (rad)", "MPJVE (rad/s)"
        );
        for (level, m) in &self.per_level {
            let _ = writeln!(
                s,
                "{:<24} {:>10.6} {:>10.6} {:>12.6}",
                format!("level {level}"),
                m.mpjpe,
                m.mpjae,
                m.mpjve
            );
        }
        let m = &self.overall;
        let _ = writeln!(
            s,
            "{:<24} {:>10.6} {:>10.6} {:>12.6}",
            "overall", m.mpjpe, m.mpjae, m.mpjve
        );
        s
    }
}
