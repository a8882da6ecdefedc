//! Actor observation assembly.
//!
//! The 616-wide actor input is a multi-scale motion command (current target,
//! two short-horizon targets, five long-horizon targets, 65 values each)
//! followed by 96 proprioceptive values.
//!
//! Each 65-value target frame is, in order: 29 joint positions, anchor world
//! translation (3), anchor world orientation in 6D (6), anchor linear velocity
//! (3), anchor angular velocity (3) and the positions of 7 key bodies in the
//! anchor frame (21).

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::{self, Quat};
use crate::motion::{MotionClip, RobotFrame, RobotLayout, JOINT_COUNT, QUAT_NORM_TOLERANCE};
use crate::num::Real;

pub const TARGET_FRAME_DIM: usize = 65;
pub const SHORT_HORIZON_FRAMES: usize = 2;
pub const LONG_HORIZON_FRAMES: usize = 5;
pub const COMMAND_DIM: usize = TARGET_FRAME_DIM * (1 + SHORT_HORIZON_FRAMES + LONG_HORIZON_FRAMES);
pub const PROPRIO_DIM: usize = 6 + 3 + 3 * JOINT_COUNT;
pub const OBSERVATION_DIM: usize = COMMAND_DIM + PROPRIO_DIM;
pub const KEY_BODY_COUNT: usize = 7;

pub const DEFAULT_KEY_BODIES: [&str; KEY_BODY_COUNT] = [
    "head",
    "left_wrist",
    "right_wrist",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

/// Named segments of the observation vector, in order.
pub const SEGMENTS: [(&str, usize); 8] = [
    ("current_target", TARGET_FRAME_DIM),
    (
        "short_future_targets",
        TARGET_FRAME_DIM * SHORT_HORIZON_FRAMES,
    ),
    (
        "long_future_targets",
        TARGET_FRAME_DIM * LONG_HORIZON_FRAMES,
    ),
    ("motion_anchor_ori_b", 6),
    ("base_ang_vel", 3),
    ("joint_pos", JOINT_COUNT),
    ("joint_vel", JOINT_COUNT),
    ("prev_actions", JOINT_COUNT),
];

/// `(name, range)` for every segment; the ranges partition `0..616`.
pub fn offset_table() -> Vec<(&'static str, Range<usize>)> {
    let mut at = 0;
    SEGMENTS
        .iter()
        .map(|(name, width)| {
            let r = at..at + width;
            at += width;
            (*name, r)
        })
        .collect()
}

pub fn segment_range(name: &str) -> Option<Range<usize>> {
    offset_table()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, r)| r)
}

/// Text manifest of the offset table: `name start width` per line.
pub fn offset_manifest() -> String {
    let mut s = String::from("# segment start width\n");
    for (name, r) in offset_table() {
        s.push_str(&format!("{name} {} {}\n", r.start, r.len()));
    }
    s
}

/// First two columns of the rotation matrix of `q`, column-major.
pub fn quat_to_6d<T: Real>(q: Quat<T>) -> Result<[T; 6]> {
    if !q.is_unit(T::lit(QUAT_NORM_TOLERANCE)) {
        return Err(Error::InvalidArgument(format!(
            "quaternion norm {} is not unit",
            q.norm()
        )));
    }
    let m = q.to_matrix();
    Ok([m[0][0], m[1][0], m[2][0], m[0][1], m[1][1], m[2][1]])
}

/// Which bodies fill the key-body slots and how far apart long-horizon
/// targets are sampled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandLayout {
    pub key_bodies: [String; KEY_BODY_COUNT],
    pub long_stride: usize,
}

impl Default for CommandLayout {
    fn default() -> Self {
        Self {
            key_bodies: DEFAULT_KEY_BODIES.map(String::from),
            long_stride: 5,
        }
    }
}

impl CommandLayout {
    /// Frame indices feeding the eight command slots at time `t`, clamped to
    /// the last frame.
    pub fn frame_indices(&self, t: usize, n_frames: usize) -> [usize; 8] {
        let last = n_frames.saturating_sub(1);
        let mut out = [0; 8];
        out[0] = t.min(last);
        for (k, slot) in out[1..=SHORT_HORIZON_FRAMES].iter_mut().enumerate() {
            *slot = (t + k + 1).min(last);
        }
        for (k, slot) in out[SHORT_HORIZON_FRAMES + 1..].iter_mut().enumerate() {
            *slot = (t + (k + 1) * self.long_stride).min(last);
        }
        out
    }

    fn key_body_indices(&self, layout: &RobotLayout) -> Result<[usize; KEY_BODY_COUNT]> {
        let mut out = [0; KEY_BODY_COUNT];
        for (slot, name) in out.iter_mut().zip(&self.key_bodies) {
            *slot = layout.body_index(name).ok_or_else(|| {
                Error::InvalidArgument(format!("key body `{name}` not in clip layout"))
            })?;
        }
        Ok(out)
    }
}

fn target_frame_into<T: Real>(
    f: &RobotFrame<T>,
    key: &[usize; KEY_BODY_COUNT],
    out: &mut Vec<T>,
) -> Result<()> {
    if f.joint_pos.len() != JOINT_COUNT {
        return Err(Error::dim("joint_pos", JOINT_COUNT, f.joint_pos.len()));
    }
    let start = out.len();
    let anchor_q = f.anchor_quat();
    let anchor_p = f.anchor_pos();
    out.extend_from_slice(&f.joint_pos);
    out.extend_from_slice(&anchor_p);
    out.extend_from_slice(&quat_to_6d(anchor_q)?);
    out.extend_from_slice(&f.body_lin_vel[f.anchor_index]);
    out.extend_from_slice(&f.body_ang_vel[f.anchor_index]);
    for &b in key {
        out.extend_from_slice(&anchor_q.inverse_rotate(geometry::sub(f.body_pos[b], anchor_p)));
    }
    debug_assert_eq!(out.len() - start, TARGET_FRAME_DIM);
    Ok(())
}

/// The 65-value target of one frame.
pub fn target_frame<T: Real>(
    clip: &MotionClip<T>,
    t: usize,
    layout: &CommandLayout,
) -> Result<Vec<T>> {
    let (frames, robot) = robot_parts(clip)?;
    let frame = frames.get(t).ok_or_else(|| {
        Error::InvalidArgument(format!("frame {t} beyond clip of {}", frames.len()))
    })?;
    let mut out = Vec::with_capacity(TARGET_FRAME_DIM);
    target_frame_into(frame, &layout.key_body_indices(robot)?, &mut out)?;
    Ok(out)
}

fn robot_parts<T: Real>(clip: &MotionClip<T>) -> Result<(&[RobotFrame<T>], &RobotLayout)> {
    match (clip.robot_frames(), clip.robot_layout()) {
        (Some(f), Some(l)) if !f.is_empty() => Ok((f, l)),
        (Some(_), Some(_)) => Err(Error::InvalidArgument(format!(
            "clip `{}` is empty",
            clip.name
        ))),
        _ => Err(Error::InvalidArgument(format!(
            "clip `{}` is not a robot clip",
            clip.name
        ))),
    }
}

/// The 520-value multi-scale command at frame `t`.
pub fn build_command<T: Real>(
    clip: &MotionClip<T>,
    t: usize,
    layout: &CommandLayout,
) -> Result<Vec<T>> {
    let (frames, robot) = robot_parts(clip)?;
    if t >= frames.len() {
        return Err(Error::InvalidArgument(format!(
            "frame {t} beyond clip of {}",
            frames.len()
        )));
    }
    let key = layout.key_body_indices(robot)?;
    let mut out = Vec::with_capacity(COMMAND_DIM);
    for idx in layout.frame_indices(t, frames.len()) {
        target_frame_into(&frames[idx], &key, &mut out)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Proprioception<T> {
    /// Anchor orientation in the body frame, 6D.
    pub anchor_ori_6d: Vec<T>,
    pub base_ang_vel: Vec<T>,
    pub joint_pos: Vec<T>,
    pub joint_vel: Vec<T>,
    pub prev_actions: Vec<T>,
}

impl<T: Real> Proprioception<T> {
    /// Zero state with identity orientation.
    pub fn zeroed() -> Self {
        let mut ori = vec![T::zero(); 6];
        ori[0] = T::one();
        ori[4] = T::one();
        Self {
            anchor_ori_6d: ori,
            base_ang_vel: vec![T::zero(); 3],
            joint_pos: vec![T::zero(); JOINT_COUNT],
            joint_vel: vec![T::zero(); JOINT_COUNT],
            prev_actions: vec![T::zero(); JOINT_COUNT],
        }
    }

    fn segments(&self) -> [(&'static str, &[T]); 5] {
        [
            ("motion_anchor_ori_b", &self.anchor_ori_6d),
            ("base_ang_vel", &self.base_ang_vel),
            ("joint_pos", &self.joint_pos),
            ("joint_vel", &self.joint_vel),
            ("prev_actions", &self.prev_actions),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationVector<T> {
    data: Vec<T>,
}

impl<T: Real> ObservationVector<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn segment(&self, name: &str) -> Option<&[T]> {
        segment_range(name).map(|r| &self.data[r])
    }

    /// The long-horizon block as five 65-wide rows, the input contract of a
    /// temporal encoder.
    pub fn long_horizon_rows(&self) -> Vec<&[T]> {
        let r = segment_range("long_future_targets").expect("static segment");
        self.data[r].chunks_exact(TARGET_FRAME_DIM).collect()
    }
}

/// Command followed by proprioception, checking each segment's width.
pub fn assemble_observation<T: Real>(
    command: &[T],
    proprio: &Proprioception<T>,
) -> Result<ObservationVector<T>> {
    if command.len() != COMMAND_DIM {
        return Err(Error::dim("command", COMMAND_DIM, command.len()));
    }
    let mut data = Vec::with_capacity(OBSERVATION_DIM);
    data.extend_from_slice(command);
    let table = offset_table();
    for (name, values) in proprio.segments() {
        let width = table
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, r)| r.len())
            .expect("static segment");
        if values.len() != width {
            return Err(Error::dim(name, width, values.len()));
        }
        data.extend_from_slice(values);
    }
    Ok(ObservationVector { data })
}

pub fn build_observation<T: Real>(
    clip: &MotionClip<T>,
    t: usize,
    proprio: &Proprioception<T>,
    layout: &CommandLayout,
) -> Result<ObservationVector<T>> {
    assemble_observation(&build_command(clip, t, layout)?, proprio)
}
