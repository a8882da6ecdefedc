//! Tracking rewards and regularization penalties.
//!
//! Task terms are `weight · exp(−d² / σ²)` for an error metric `d` between the
//! reference and actual robot state. Relative body terms express every
//! non-anchor body in its own trajectory's anchor frame before differencing,
//! and place the mean squared error across bodies inside one kernel.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, geodesic_angle, Quat, Vec3};
use crate::motion::{RobotFrame, QUAT_NORM_TOLERANCE};
use crate::num::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermParams<T> {
    pub weight: T,
    pub sigma: T,
}

impl<T: Real> TermParams<T> {
    fn new(weight: f64, sigma: f64) -> Self {
        Self {
            weight: T::lit(weight),
            sigma: T::lit(sigma),
        }
    }

    pub fn eval(&self, d: T) -> T {
        self.weight * kernel(d, self.sigma)
    }

    /// Evaluates from a squared error directly, avoiding a square root.
    pub fn eval_sq(&self, d_sq: T) -> T {
        self.weight * (-d_sq / (self.sigma * self.sigma)).exp()
    }
}

/// Frame in which body velocities are compared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityFrame {
    #[default]
    World,
    Anchor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig<T> {
    pub anchor_pos: TermParams<T>,
    pub anchor_ori: TermParams<T>,
    pub rel_body_pos: TermParams<T>,
    pub rel_body_ori: TermParams<T>,
    pub body_lin_vel: TermParams<T>,
    pub body_ang_vel: TermParams<T>,
    pub velocity_frame: VelocityFrame,
    pub action_rate_weight: T,
    pub joint_limit_weight: T,
    pub contact_weight: T,
    /// Newtons; contacts strictly above this count.
    pub contact_force_threshold: T,
    pub allowed_contact_bodies: BTreeSet<String>,
}

// The angular-velocity sigma is the tabulated 3.14, not π.
#[allow(clippy::approx_constant)]
impl<T: Real> Default for RewardConfig<T> {
    fn default() -> Self {
        Self {
            anchor_pos: TermParams::new(0.8, 0.2),
            anchor_ori: TermParams::new(0.5, 0.4),
            rel_body_pos: TermParams::new(1.0, 0.3),
            rel_body_ori: TermParams::new(1.0, 0.4),
            body_lin_vel: TermParams::new(1.0, 1.0),
            body_ang_vel: TermParams::new(1.0, 3.14),
            velocity_frame: VelocityFrame::World,
            action_rate_weight: T::lit(-0.1),
            joint_limit_weight: T::lit(-10.0),
            contact_weight: T::lit(-0.1),
            contact_force_threshold: T::lit(1.0),
            allowed_contact_bodies: ["left_ankle", "right_ankle", "left_wrist", "right_wrist"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

impl<T: Real> RewardConfig<T> {
    pub fn task_terms(&self) -> [(&'static str, TermParams<T>); 6] {
        [
            ("anchor_pos", self.anchor_pos),
            ("anchor_ori", self.anchor_ori),
            ("rel_body_pos", self.rel_body_pos),
            ("rel_body_ori", self.rel_body_ori),
            ("body_lin_vel", self.body_lin_vel),
            ("body_ang_vel", self.body_ang_vel),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in self.task_terms() {
            if !(t.sigma.is_finite() && t.sigma > T::zero()) {
                return Err(Error::Config(format!("{name}.sigma must be positive")));
            }
            if !(t.weight.is_finite() && t.weight >= T::zero()) {
                return Err(Error::Config(format!("{name}.weight must be nonnegative")));
            }
        }
        for (name, w) in [
            ("action_rate_weight", self.action_rate_weight),
            ("joint_limit_weight", self.joint_limit_weight),
            ("contact_weight", self.contact_weight),
        ] {
            if !(w.is_finite() && w <= T::zero()) {
                return Err(Error::Config(format!("{name} must be nonpositive")));
            }
        }
        Ok(())
    }
}

/// Geodesic angle between two unit quaternions.
pub fn quat_error<T: Real>(q1: Quat<T>, q2: Quat<T>) -> Result<T> {
    ensure_unit(q1)?;
    ensure_unit(q2)?;
    Ok(geodesic_angle(q1, q2))
}

fn ensure_unit<T: Real>(q: Quat<T>) -> Result<()> {
    if q.is_unit(T::lit(QUAT_NORM_TOLERANCE)) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "quaternion norm {} is not unit",
            q.norm()
        )))
    }
}

pub fn kernel<T: Real>(d: T, sigma: T) -> T {
    (-(d * d) / (sigma * sigma)).exp()
}

/// Reference and actual state at one control step.
#[derive(Clone, Copy, Debug)]
pub struct BodyStatePair<'a, T> {
    pub reference: &'a RobotFrame<T>,
    pub actual: &'a RobotFrame<T>,
}

impl<'a, T: Real> BodyStatePair<'a, T> {
    pub fn new(reference: &'a RobotFrame<T>, actual: &'a RobotFrame<T>) -> Result<Self> {
        if reference.n_bodies() != actual.n_bodies() {
            return Err(Error::dim(
                "actual bodies",
                reference.n_bodies(),
                actual.n_bodies(),
            ));
        }
        if reference.anchor_index != actual.anchor_index {
            return Err(Error::InvalidArgument(
                "anchor index differs between states".into(),
            ));
        }
        let n = reference.n_bodies();
        if reference.anchor_index >= n {
            return Err(Error::InvalidArgument("anchor index out of range".into()));
        }
        for (side, f) in [("reference", reference), ("actual", actual)] {
            if f.body_quat.len() != n || f.body_lin_vel.len() != n || f.body_ang_vel.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "{side} state has inconsistent per-body field lengths"
                )));
            }
        }
        Ok(Self { reference, actual })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskRewards<T> {
    pub anchor_pos: T,
    pub anchor_ori: T,
    pub rel_body_pos: T,
    pub rel_body_ori: T,
    pub body_lin_vel: T,
    pub body_ang_vel: T,
}

impl<T: Real> TaskRewards<T> {
    pub fn named(&self) -> [(&'static str, T); 6] {
        [
            ("anchor_pos", self.anchor_pos),
            ("anchor_ori", self.anchor_ori),
            ("rel_body_pos", self.rel_body_pos),
            ("rel_body_ori", self.rel_body_ori),
            ("body_lin_vel", self.body_lin_vel),
            ("body_ang_vel", self.body_ang_vel),
        ]
    }

    pub fn total(&self) -> T {
        self.named().iter().map(|(_, v)| *v).sum()
    }
}

fn mean_or_zero<T: Real>(sum: T, n: usize) -> T {
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_usize_lossy(n)
    }
}

pub fn task_rewards<T: Real>(
    pair: &BodyStatePair<'_, T>,
    cfg: &RewardConfig<T>,
) -> Result<TaskRewards<T>> {
    let (r, a) = (pair.reference, pair.actual);
    let anchor = r.anchor_index;
    let n = r.n_bodies();
    let (ra_p, aa_p) = (r.anchor_pos(), a.anchor_pos());
    let (ra_q, aa_q) = (r.anchor_quat(), a.anchor_quat());

    let anchor_pos = cfg
        .anchor_pos
        .eval(geometry::norm(geometry::sub(ra_p, aa_p)));
    let anchor_ori = cfg.anchor_ori.eval(quat_error(ra_q, aa_q)?);

    let mut pos_sq = T::zero();
    let mut ori_sq = T::zero();
    for i in (0..n).filter(|&i| i != anchor) {
        let rel_r = ra_q.inverse_rotate(geometry::sub(r.body_pos[i], ra_p));
        let rel_a = aa_q.inverse_rotate(geometry::sub(a.body_pos[i], aa_p));
        pos_sq = pos_sq + geometry::norm_sq(geometry::sub(rel_r, rel_a));
        let qr = ra_q.conj().mul(r.body_quat[i]);
        let qa = aa_q.conj().mul(a.body_quat[i]);
        ensure_unit(r.body_quat[i])?;
        ensure_unit(a.body_quat[i])?;
        let e = geodesic_angle(qr, qa);
        ori_sq = ori_sq + e * e;
    }
    let rel_body_pos = cfg.rel_body_pos.eval_sq(mean_or_zero(pos_sq, n - 1));
    let rel_body_ori = cfg.rel_body_ori.eval_sq(mean_or_zero(ori_sq, n - 1));

    let to_frame = |q: Quat<T>, v: Vec3<T>| match cfg.velocity_frame {
        VelocityFrame::World => v,
        VelocityFrame::Anchor => q.inverse_rotate(v),
    };
    let mut lin_sq = T::zero();
    let mut ang_sq = T::zero();
    for i in 0..n {
        let dv = geometry::sub(
            to_frame(ra_q, r.body_lin_vel[i]),
            to_frame(aa_q, a.body_lin_vel[i]),
        );
        let dw = geometry::sub(
            to_frame(ra_q, r.body_ang_vel[i]),
            to_frame(aa_q, a.body_ang_vel[i]),
        );
        lin_sq = lin_sq + geometry::norm_sq(dv);
        ang_sq = ang_sq + geometry::norm_sq(dw);
    }
    let body_lin_vel = cfg.body_lin_vel.eval_sq(mean_or_zero(lin_sq, n));
    let body_ang_vel = cfg.body_ang_vel.eval_sq(mean_or_zero(ang_sq, n));

    Ok(TaskRewards {
        anchor_pos,
        anchor_ori,
        rel_body_pos,
        rel_body_ori,
        body_lin_vel,
        body_ang_vel,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactForce<T> {
    pub body: String,
    /// Contact force magnitude in newtons.
    pub force: T,
}

/// Actuation-side inputs of the penalty terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlStep<T> {
    pub action: Vec<T>,
    pub prev_action: Vec<T>,
    /// Measured joint positions checked against `joint_limits`.
    pub joint_pos: Vec<T>,
    /// `(lo, hi)` per joint in radians.
    pub joint_limits: Vec<(T, T)>,
    #[serde(default)]
    pub contact_forces: Vec<ContactForce<T>>,
}

impl<T: Real> ControlStep<T> {
    /// A step with no action change, every joint at the middle of `(−π, π)`
    /// limits and no contacts.
    pub fn clean(n_joints: usize) -> Self {
        Self {
            action: vec![T::zero(); n_joints],
            prev_action: vec![T::zero(); n_joints],
            joint_pos: vec![T::zero(); n_joints],
            joint_limits: vec![(-T::PI(), T::PI()); n_joints],
            contact_forces: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.action.len();
        if self.prev_action.len() != n {
            return Err(Error::dim("prev_action", n, self.prev_action.len()));
        }
        if self.joint_limits.len() != self.joint_pos.len() {
            return Err(Error::dim(
                "joint_limits",
                self.joint_pos.len(),
                self.joint_limits.len(),
            ));
        }
        if let Some(j) = self
            .joint_limits
            .iter()
            .position(|(lo, hi)| lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::InvalidArgument(format!(
                "joint {j} limits are not lo < hi"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regularization<T> {
    pub action_rate: T,
    pub joint_limit: T,
    pub contacts: T,
}

impl<T: Real> Regularization<T> {
    pub fn named(&self) -> [(&'static str, T); 3] {
        [
            ("action_rate", self.action_rate),
            ("joint_limit", self.joint_limit),
            ("contacts", self.contacts),
        ]
    }

    pub fn total(&self) -> T {
        self.action_rate + self.joint_limit + self.contacts
    }
}

pub fn regularization<T: Real>(
    step: &ControlStep<T>,
    cfg: &RewardConfig<T>,
) -> Result<Regularization<T>> {
    step.validate()?;
    let rate: T = step
        .action
        .iter()
        .zip(&step.prev_action)
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum();
    let out_of_range = step
        .joint_pos
        .iter()
        .zip(&step.joint_limits)
        .filter(|(q, (lo, hi))| **q < *lo || **q > *hi)
        .count();
    let bad_contacts = step
        .contact_forces
        .iter()
        .filter(|c| {
            !cfg.allowed_contact_bodies.contains(&c.body) && c.force > cfg.contact_force_threshold
        })
        .count();
    Ok(Regularization {
        action_rate: cfg.action_rate_weight * rate,
        joint_limit: cfg.joint_limit_weight * T::from_usize_lossy(out_of_range),
        contacts: cfg.contact_weight * T::from_usize_lossy(bad_contacts),
    })
}

pub fn total_reward<T: Real>(
    pair: &BodyStatePair<'_, T>,
    step: &ControlStep<T>,
    cfg: &RewardConfig<T>,
) -> Result<T> {
    Ok(task_rewards(pair, cfg)?.total() + regularization(step, cfg)?.total())
}
