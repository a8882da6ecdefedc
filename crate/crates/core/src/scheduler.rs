//! Adaptive per-clip motion scheduling.
//!
//! Each clip keeps an EMA of its tracking error and EMAs of its success and
//! failure events. These combine into a difficulty score `r ∈ [0, 1]`, and the
//! sampling distribution is a temperature-scaled softmax over `γ·log(r + ε)`
//! mixed with a uniform exploration floor.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig<T> {
    /// EMA rate for the tracking error.
    pub alpha: T,
    /// EMA rate for success/failure events.
    pub beta: T,
    /// Balance between the error term (0) and the failure term (1).
    pub w: T,
    /// Error normalization constant (meters).
    pub c: T,
    pub gamma: T,
    pub temperature: T,
    /// Uniform mixing weight.
    pub eps_explore: T,
    /// Small constant in the success ratio and inside the log.
    pub eps_num: T,
}

impl<T: Real> Default for SchedulerConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.1),
            beta: T::lit(0.05),
            w: T::lit(0.5),
            c: T::lit(0.5),
            gamma: T::lit(1.0),
            temperature: T::lit(1.0),
            eps_explore: T::lit(0.1),
            eps_num: T::lit(1e-6),
        }
    }
}

fn unit_interval<T: Real>(name: &str, v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must lie in [0, 1]")))
    }
}

fn positive<T: Real>(name: &str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must be positive")))
    }
}

impl<T: Real> SchedulerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        unit_interval("alpha", self.alpha)?;
        unit_interval("beta", self.beta)?;
        unit_interval("w", self.w)?;
        unit_interval("eps_explore", self.eps_explore)?;
        positive("c", self.c)?;
        positive("temperature", self.temperature)?;
        positive("eps_num", self.eps_num)?;
        if !self.gamma.is_finite() {
            return Err(Error::Config("gamma must be finite".into()));
        }
        Ok(())
    }
}

/// Per-clip scheduler statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClipStats<T> {
    /// EMA tracking error.
    pub error: T,
    /// Success EMA.
    pub success: T,
    /// Failure EMA.
    pub failure: T,
    /// Whether `error` has received its first observation.
    pub initialized: bool,
}

impl<T: Real> ClipStats<T> {
    /// EMA update of the tracking error. The first observation replaces the
    /// zero initial value instead of being blended with it.
    pub fn update_error(&self, observed: T, alpha: T) -> Result<Self> {
        if !(observed.is_finite() && observed >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "tracking error {observed} must be finite and nonnegative"
            )));
        }
        unit_interval("alpha", alpha)?;
        let error = if self.initialized {
            (T::one() - alpha) * self.error + alpha * observed
        } else {
            observed
        };
        Ok(Self {
            error,
            initialized: true,
            ..*self
        })
    }

    pub fn update_outcome(&self, success: bool, beta: T) -> Self {
        self.update_outcome_rate(if success { T::one() } else { T::zero() }, beta)
    }

    /// Outcome update with a success fraction in `[0, 1]`; the failure event
    /// receives the complement. A single episode is `rate ∈ {0, 1}`.
    pub fn update_outcome_rate(&self, rate: T, beta: T) -> Self {
        let keep = T::one() - beta;
        Self {
            success: keep * self.success + beta * rate,
            failure: keep * self.failure + beta * (T::one() - rate),
            ..*self
        }
    }

    pub fn success_prob(&self, eps_num: T) -> T {
        self.success / (self.success + self.failure + eps_num)
    }

    pub fn difficulty_score(&self, cfg: &SchedulerConfig<T>) -> T {
        let err = (self.error / cfg.c).max(T::zero()).min(T::one());
        (T::one() - cfg.w) * err + cfg.w * (T::one() - self.success_prob(cfg.eps_num))
    }
}

/// One episode's result on a clip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation<T> {
    pub clip: usize,
    pub error: T,
    pub success: bool,
}

/// Statistics for every clip of a library, in library order.
#[derive(Clone, Debug, PartialEq)]
pub struct SchedulerState<T> {
    names: Vec<String>,
    stats: Vec<ClipStats<T>>,
}

impl<T: Real> SchedulerState<T> {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidArgument(
                "scheduler needs at least one clip".into(),
            ));
        }
        let stats = vec![ClipStats::default(); names.len()];
        Ok(Self { names, stats })
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn stats(&self) -> &[ClipStats<T>] {
        &self.stats
    }

    pub fn stats_mut(&mut self) -> &mut [ClipStats<T>] {
        &mut self.stats
    }

    pub fn difficulty_scores(&self, cfg: &SchedulerConfig<T>) -> Vec<T> {
        self.stats.iter().map(|s| s.difficulty_score(cfg)).collect()
    }

    pub fn sampling_distribution(&self, cfg: &SchedulerConfig<T>) -> Vec<T> {
        distribution_from_scores(&self.difficulty_scores(cfg), cfg)
    }

    /// Applies one iteration's episodes as a single ordered batch. Episodes on
    /// the same clip are pooled: their mean error drives one error update and
    /// their success fraction drives one outcome update. Clips are updated in
    /// ascending index order.
    pub fn apply_batch(
        &mut self,
        batch: &[Observation<T>],
        cfg: &SchedulerConfig<T>,
    ) -> Result<()> {
        let mut pooled: Vec<Option<(T, T, usize)>> = vec![None; self.len()];
        for ob in batch {
            if ob.clip >= self.len() {
                return Err(Error::InvalidArgument(format!(
                    "clip index {} out of range for {} clips",
                    ob.clip,
                    self.len()
                )));
            }
            if !(ob.error.is_finite() && ob.error >= T::zero()) {
                return Err(Error::InvalidArgument(format!(
                    "tracking error {} must be finite and nonnegative",
                    ob.error
                )));
            }
            let slot = pooled[ob.clip].get_or_insert((T::zero(), T::zero(), 0));
            slot.0 = slot.0 + ob.error;
            if ob.success {
                slot.1 = slot.1 + T::one();
            }
            slot.2 += 1;
        }
        for (i, p) in pooled.into_iter().enumerate() {
            if let Some((err_sum, succ, n)) = p {
                let n = T::from_usize_lossy(n);
                let s = self.stats[i].update_error(err_sum / n, cfg.alpha)?;
                self.stats[i] = s.update_outcome_rate(succ / n, cfg.beta);
            }
        }
        Ok(())
    }

    /// Text checkpoint, one `name E S F initialized` record per clip.
    pub fn checkpoint(&self) -> String {
        let mut s = String::new();
        for (name, st) in self.names.iter().zip(&self.stats) {
            s.push_str(&format!(
                "{name} {} {} {} {}\n",
                st.error, st.success, st.failure, st.initialized as u8
            ));
        }
        s
    }

    pub fn restore(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            file: "scheduler checkpoint".into(),
            field: format!("line {line}"),
            message: msg.to_string(),
        };
        let mut names = Vec::new();
        let mut stats = Vec::new();
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let [name, e, s, f, init] = toks[..] else {
                return Err(bad(i + 1, "expected `name E S F initialized`"));
            };
            let num = |t: &str| t.parse::<T>().map_err(|_| bad(i + 1, "bad number"));
            let initialized = match init {
                "0" => false,
                "1" => true,
                _ => return Err(bad(i + 1, "initialized flag must be 0 or 1")),
            };
            names.push(name.to_string());
            stats.push(ClipStats {
                error: num(e)?,
                success: num(s)?,
                failure: num(f)?,
                initialized,
            });
        }
        let mut state = Self::new(names)?;
        state.stats = stats;
        Ok(state)
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        fs::write(path, self.checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        Self::restore(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Reorders statistics to follow `names`, which must be a permutation of
    /// the state's clip names.
    pub fn reordered(&self, names: &[String]) -> Result<Self> {
        let pos: HashMap<&str, usize> = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        if names.len() != self.len() {
            return Err(Error::dim("clip names", self.len(), names.len()));
        }
        let stats = names
            .iter()
            .map(|n| {
                pos.get(n.as_str())
                    .map(|&i| self.stats[i])
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown clip `{n}`")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            names: names.to_vec(),
            stats,
        })
    }
}

/// Sampling probabilities from difficulty scores:
/// `(1 − ε)·softmax(γ·log(r + ε_num) / T) + ε / N`.
pub fn distribution_from_scores<T: Real>(scores: &[T], cfg: &SchedulerConfig<T>) -> Vec<T> {
    let n = scores.len();
    if n == 0 {
        return Vec::new();
    }
    let logits: Vec<T> = scores
        .iter()
        .map(|r| cfg.gamma * (*r + cfg.eps_num).ln() / cfg.temperature)
        .collect();
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|l| (*l - max).exp()).collect();
    let z: T = exps.iter().copied().sum();
    let floor = cfg.eps_explore / T::from_usize_lossy(n);
    let keep = T::one() - cfg.eps_explore;
    exps.into_iter().map(|e| keep * e / z + floor).collect()
}

/// Draws `count` i.i.d. indices from `weights` (need not be normalized).
pub fn sample_indices<T: Real, R: Rng + ?Sized>(
    weights: &[T],
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let w: Vec<f64> = weights
        .iter()
        .map(|w| w.to_f64().unwrap_or(f64::NAN))
        .collect();
    let dist = WeightedIndex::new(&w)
        .map_err(|e| Error::InvalidArgument(format!("sampling weights: {e}")))?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// Seeded draws from the scheduler distribution.
pub fn sample_clips<T: Real>(
    state: &SchedulerState<T>,
    cfg: &SchedulerConfig<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_indices(&state.sampling_distribution(cfg), count, &mut rng)
}
