//! Progressive difficulty exposure.
//!
//! Clips carry a difficulty level on the 1–10 scale. Training starts at the
//! lowest level present in the library and unlocks the next present level
//! once tracking at the current frontier is good enough, or after a fixed
//! number of iterations. Sampling inside the unlocked set is biased toward
//! the frontier, newly unlocked clips are ramped in, and every unlocked level
//! keeps a minimum share of the sampling mass.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{MAX_DIFFICULTY, MIN_DIFFICULTY};
use crate::num::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig<T> {
    /// MPJPE threshold in meters.
    pub theta_pos: T,
    /// MPJAE threshold in radians.
    pub theta_ang: T,
    pub auto_advance_iters: u64,
    /// Multiplier on frontier-level clips, at least 1.
    pub w_new: T,
    /// Minimum total sampling mass per unlocked level.
    pub min_level_ratio: T,
    /// Iterations over which a newly unlocked level ramps in.
    pub ramp_iters: u64,
}

impl<T: Real> Default for CurriculumConfig<T> {
    fn default() -> Self {
        Self {
            theta_pos: T::lit(0.12),
            theta_ang: T::lit(0.30),
            auto_advance_iters: 2000,
            w_new: T::lit(2.0),
            min_level_ratio: T::lit(0.05),
            ramp_iters: 50,
        }
    }
}

impl<T: Real> CurriculumConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_pos > T::zero() && self.theta_ang > T::zero()) {
            return Err(Error::Config(
                "curriculum thresholds must be positive".into(),
            ));
        }
        if !(self.w_new.is_finite() && self.w_new >= T::one()) {
            return Err(Error::Config(format!(
                "w_new = {} must be at least 1",
                self.w_new
            )));
        }
        let levels = T::from_u8(MAX_DIFFICULTY).expect("small integer");
        if !(self.min_level_ratio >= T::zero()
            && self.min_level_ratio < T::one()
            && self.min_level_ratio * levels <= T::one())
        {
            return Err(Error::Config(format!(
                "min_level_ratio = {} must lie in [0, 1/{MAX_DIFFICULTY}]",
                self.min_level_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdvanceReason {
    Thresholds,
    Auto,
    None,
}

impl fmt::Display for AdvanceReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdvanceReason::Thresholds => "thresholds",
            AdvanceReason::Auto => "auto",
            AdvanceReason::None => "none",
        })
    }
}

/// Tracking metrics measured over the clips of one level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelMetrics<T> {
    pub mpjpe: T,
    pub mpjae: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurriculumState<T> {
    levels: Vec<u8>,
    frontier: usize,
    /// Iterations spent since the frontier was last moved.
    pub iters_at_level: u64,
    ramping: bool,
    /// Latest reported metrics per level.
    pub level_metrics: BTreeMap<u8, LevelMetrics<T>>,
}

impl<T: Real> CurriculumState<T> {
    /// Curriculum over the distinct levels in `levels`, starting at the lowest.
    /// The starting level needs no ramp-in.
    pub fn new(levels: &[u8]) -> Result<Self> {
        let mut distinct: Vec<u8> = levels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.is_empty() {
            return Err(Error::InvalidArgument(
                "curriculum needs at least one level".into(),
            ));
        }
        if let Some(bad) = distinct
            .iter()
            .find(|l| !(MIN_DIFFICULTY..=MAX_DIFFICULTY).contains(*l))
        {
            return Err(Error::InvalidArgument(format!(
                "level {bad} outside 1..=10"
            )));
        }
        Ok(Self {
            levels: distinct,
            frontier: 0,
            iters_at_level: 0,
            ramping: false,
            level_metrics: BTreeMap::new(),
        })
    }

    /// Curriculum over every level of the 1–10 scale.
    pub fn full_scale() -> Self {
        let all: Vec<u8> = (MIN_DIFFICULTY..=MAX_DIFFICULTY).collect();
        Self::new(&all).expect("non-empty scale")
    }

    /// Highest unlocked level.
    pub fn l_max(&self) -> u8 {
        self.levels[self.frontier]
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn unlocked_levels(&self) -> &[u8] {
        &self.levels[..=self.frontier]
    }

    pub fn at_ceiling(&self) -> bool {
        self.frontier + 1 == self.levels.len()
    }

    /// Ramp-in progress of the frontier level in `[0, 1]`.
    pub fn ramp_progress(&self, cfg: &CurriculumConfig<T>) -> T {
        if !self.ramping || self.iters_at_level >= cfg.ramp_iters {
            return T::one();
        }
        T::from_u64(self.iters_at_level).expect("iteration count")
            / T::from_u64(cfg.ramp_iters).expect("iteration count")
    }

    /// A state whose frontier was just unlocked at `level`, for tests and
    /// resumed runs.
    pub fn with_fresh_unlock(mut self, level: u8) -> Result<Self> {
        let idx = self
            .levels
            .iter()
            .position(|l| *l == level)
            .ok_or_else(|| Error::InvalidArgument(format!("level {level} not in curriculum")))?;
        self.frontier = idx;
        self.iters_at_level = 0;
        self.ramping = idx > 0;
        Ok(self)
    }
}

/// Whether the frontier should move. Threshold success takes precedence over
/// the iteration cap when both hold.
pub fn advance_check<T: Real>(
    state: &CurriculumState<T>,
    cfg: &CurriculumConfig<T>,
    metrics: Option<LevelMetrics<T>>,
) -> (bool, AdvanceReason) {
    if let Some(m) = metrics {
        if m.mpjpe < cfg.theta_pos && m.mpjae < cfg.theta_ang {
            return (true, AdvanceReason::Thresholds);
        }
    }
    if state.iters_at_level >= cfg.auto_advance_iters {
        return (true, AdvanceReason::Auto);
    }
    (false, AdvanceReason::None)
}

/// One training iteration: count it, progress the ramp, and move the frontier
/// when [`advance_check`] passes on the frontier's metrics. At the top level
/// the frontier stays put. Returns the reason reported by the check.
pub fn tick<T: Real>(
    state: &CurriculumState<T>,
    cfg: &CurriculumConfig<T>,
    level_metrics: &BTreeMap<u8, LevelMetrics<T>>,
) -> (CurriculumState<T>, AdvanceReason) {
    let mut next = state.clone();
    next.iters_at_level += 1;
    for (level, m) in level_metrics {
        next.level_metrics.insert(*level, *m);
    }
    let (advance, reason) = advance_check(&next, cfg, level_metrics.get(&next.l_max()).copied());
    if advance && !next.at_ceiling() {
        next.frontier += 1;
        next.iters_at_level = 0;
        next.ramping = true;
    }
    (next, reason)
}

/// Final sampling weights given the scheduler's distribution and the level of
/// each clip.
///
/// Locked clips get zero. Frontier clips are scaled by `ramp · w_new`. The
/// result is renormalized, then every unlocked level whose mass is below
/// `min_level_ratio` is raised to exactly that mass (keeping its internal
/// proportions) while the other levels are scaled down proportionally.
pub fn effective_weights<T: Real>(
    base: &[T],
    levels: &[u8],
    state: &CurriculumState<T>,
    cfg: &CurriculumConfig<T>,
) -> Result<Vec<T>> {
    if base.len() != levels.len() {
        return Err(Error::dim("clip levels", base.len(), levels.len()));
    }
    let l_max = state.l_max();
    let bias = state.ramp_progress(cfg) * cfg.w_new;
    let mut weights: Vec<T> = base
        .iter()
        .zip(levels)
        .map(|(p, l)| match (*l).cmp(&l_max) {
            std::cmp::Ordering::Greater => T::zero(),
            std::cmp::Ordering::Equal => bias * *p,
            std::cmp::Ordering::Less => *p,
        })
        .collect();

    let mut groups: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, l) in levels.iter().enumerate() {
        if *l <= l_max {
            groups.entry(*l).or_default().push(i);
        }
    }
    if groups.is_empty() {
        return Err(Error::AllLocked);
    }

    let mut total: T = weights.iter().copied().sum();
    if total <= T::zero() {
        // Nothing left after biasing: fall back to the base shape over the
        // unlocked clips, or uniform if that is empty too.
        for idx in groups.values() {
            for &i in idx {
                weights[i] = base[i].max(T::zero());
            }
        }
        total = weights.iter().copied().sum();
        if total <= T::zero() {
            for idx in groups.values() {
                for &i in idx {
                    weights[i] = T::one();
                }
            }
            total = weights.iter().copied().sum();
        }
    }
    for w in &mut weights {
        *w = *w / total;
    }
    apply_level_floor(&mut weights, base, &groups, cfg.min_level_ratio);
    Ok(weights)
}

/// Raises deficient levels to exactly `floor` and scales the rest down,
/// repeating until no scaled level falls below the floor. A level with no
/// weight is filled following its base proportions (uniform if those vanish).
fn apply_level_floor<T: Real>(
    weights: &mut [T],
    base: &[T],
    groups: &BTreeMap<u8, Vec<usize>>,
    floor: T,
) {
    let n_levels = T::from_usize_lossy(groups.len());
    if floor <= T::zero() || floor * n_levels > T::one() {
        return;
    }
    let mass = |w: &[T], idx: &[usize]| -> T { idx.iter().map(|&i| w[i]).sum() };
    let original: BTreeMap<u8, T> = groups
        .iter()
        .map(|(l, idx)| (*l, mass(weights, idx)))
        .collect();
    let mut pinned: BTreeMap<u8, bool> = groups.keys().map(|l| (*l, false)).collect();
    loop {
        let free_mass: T = original
            .iter()
            .filter(|(l, _)| !pinned[*l])
            .map(|(_, m)| *m)
            .sum();
        let pinned_count = pinned.values().filter(|p| **p).count();
        let remaining = T::one() - floor * T::from_usize_lossy(pinned_count);
        let scale = if free_mass > T::zero() {
            remaining / free_mass
        } else {
            T::zero()
        };
        let newly: Vec<u8> = original
            .iter()
            .filter(|(l, m)| !pinned[*l] && **m * scale < floor)
            .map(|(l, _)| *l)
            .collect();
        if newly.is_empty() {
            break;
        }
        for l in newly {
            pinned.insert(l, true);
        }
    }
    let free_mass: T = original
        .iter()
        .filter(|(l, _)| !pinned[*l])
        .map(|(_, m)| *m)
        .sum();
    let pinned_count = pinned.values().filter(|p| **p).count();
    let remaining = T::one() - floor * T::from_usize_lossy(pinned_count);
    for (l, idx) in groups {
        let m = original[l];
        if !pinned[l] {
            let scale = remaining / free_mass;
            for &i in idx {
                weights[i] = weights[i] * scale;
            }
        } else if m > T::zero() {
            for &i in idx {
                weights[i] = weights[i] / m * floor;
            }
        } else {
            let base_mass = mass(base, idx);
            for &i in idx {
                weights[i] = if base_mass > T::zero() {
                    base[i] / base_mass * floor
                } else {
                    floor / T::from_usize_lossy(idx.len())
                };
            }
        }
    }
}

/// Total weight per level, over the levels present in `levels`.
pub fn level_masses<T: Real>(weights: &[T], levels: &[u8]) -> BTreeMap<u8, T> {
    let mut out = BTreeMap::new();
    for (w, l) in weights.iter().zip(levels) {
        let e = out.entry(*l).or_insert_with(T::zero);
        *e = *e + *w;
    }
    out
}

/// Coarse visualization band of a 1–10 rating.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    Low = 1,
    Mid = 2,
    High = 3,
}

pub fn rating_to_band(rating: u8) -> Result<Band> {
    match rating {
        1..=4 => Ok(Band::Low),
        5..=7 => Ok(Band::Mid),
        8..=10 => Ok(Band::High),
        _ => Err(Error::InvalidArgument(format!(
            "rating {rating} outside 1..=10"
        ))),
    }
}
