//! Motion clips, frames and the on-disk motion library.
//!
//! # Clip file format
//!
//! One UTF-8 text file per clip, extension `.clip`:
//!
//! ```text
//! mtrack-clip 1
//! name: walk_forward
//! fps: 30
//! difficulty: 3
//! frames: 2
//! layout: robot
//! bodies: pelvis,left_hip,...
//! anchor: 0
//! fields: joint_pos body_pos body_quat
//! ---
//! <one line per frame: whitespace-separated numbers, fields in `fields` order>
//! ```
//!
//! Robot fields and widths: `joint_pos` (29), `joint_vel` (29), `body_pos`
//! (3·N), `body_quat` (4·N, `w x y z` per body), `body_lin_vel` (3·N),
//! `body_ang_vel` (3·N). The position fields are required; any missing
//! velocity field is synthesized with [`finite_difference_velocities`].
//!
//! Human clips use `layout: human` with fields `pose` (66 SMPL axis-angle
//! values) and `trans` (3), and carry no `bodies`/`anchor` records.
//!
//! A library directory holds any number of `.clip` files, loaded in
//! lexicographic file-name order, and optionally a `library.manifest` listing
//! `<file> <difficulty>` per line.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{self, Quat, Vec3};
use crate::num::Real;

pub const JOINT_COUNT: usize = 29;
pub const SMPL_POSE_DIM: usize = 66;
pub const TRANSLATION_DIM: usize = 3;
pub const MIN_DIFFICULTY: u8 = 1;
pub const MAX_DIFFICULTY: u8 = 10;
pub const QUAT_NORM_TOLERANCE: f64 = 1e-6;
pub const CLIP_EXTENSION: &str = "clip";
pub const MANIFEST_FILE: &str = "library.manifest";

const MAGIC: &str = "mtrack-clip 1";

/// Anchor (pelvis) followed by the 12 tracked limb bodies.
pub const DEFAULT_BODY_NAMES: [&str; 13] = [
    "pelvis",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_hip",
    "right_knee",
    "right_ankle",
    "head",
    "left_elbow",
    "left_wrist",
    "right_elbow",
    "right_wrist",
    "torso",
];

pub fn default_body_names() -> Vec<String> {
    DEFAULT_BODY_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HumanMotionFrame<T> {
    /// SMPL axis-angle pose; the first three values are the root orientation.
    pub pose: Vec<T>,
    pub translation: Vec<T>,
}

impl<T: Real> HumanMotionFrame<T> {
    /// The 69-wide row used by the tokenizer: pose followed by translation.
    pub fn to_row(&self) -> Vec<T> {
        self.pose.iter().chain(&self.translation).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotFrame<T> {
    pub joint_pos: Vec<T>,
    pub joint_vel: Vec<T>,
    pub body_pos: Vec<Vec3<T>>,
    pub body_quat: Vec<Quat<T>>,
    pub body_lin_vel: Vec<Vec3<T>>,
    pub body_ang_vel: Vec<Vec3<T>>,
    pub anchor_index: usize,
}

impl<T: Real> RobotFrame<T> {
    /// All-zero state with identity orientations.
    pub fn zeroed(n_bodies: usize, anchor_index: usize) -> Self {
        Self {
            joint_pos: vec![T::zero(); JOINT_COUNT],
            joint_vel: vec![T::zero(); JOINT_COUNT],
            body_pos: vec![[T::zero(); 3]; n_bodies],
            body_quat: vec![Quat::identity(); n_bodies],
            body_lin_vel: vec![[T::zero(); 3]; n_bodies],
            body_ang_vel: vec![[T::zero(); 3]; n_bodies],
            anchor_index,
        }
    }

    pub fn n_bodies(&self) -> usize {
        self.body_pos.len()
    }

    pub fn anchor_pos(&self) -> Vec3<T> {
        self.body_pos[self.anchor_index]
    }

    pub fn anchor_quat(&self) -> Quat<T> {
        self.body_quat[self.anchor_index]
    }

    /// Applies the same world translation to every body.
    pub fn translated(&self, offset: Vec3<T>) -> Self {
        let mut out = self.clone();
        for p in &mut out.body_pos {
            *p = geometry::add(*p, offset);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Frames<T> {
    Robot(Vec<RobotFrame<T>>),
    Human(Vec<HumanMotionFrame<T>>),
}

impl<T> Frames<T> {
    pub fn len(&self) -> usize {
        match self {
            Frames::Robot(f) => f.len(),
            Frames::Human(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobotLayout {
    pub body_names: Vec<String>,
    pub anchor_index: usize,
}

impl Default for RobotLayout {
    fn default() -> Self {
        Self {
            body_names: default_body_names(),
            anchor_index: 0,
        }
    }
}

impl RobotLayout {
    pub fn body_index(&self, name: &str) -> Option<usize> {
        self.body_names.iter().position(|b| b == name)
    }
}

/// Which kind of frames a clip carries and how robot bodies are named.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Layout {
    Robot(RobotLayout),
    Human,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionClip<T> {
    pub name: String,
    pub fps: T,
    /// Grade on the 1–10 difficulty scale.
    pub difficulty: u8,
    pub layout: Layout,
    pub frames: Frames<T>,
}

impl<T: Real> MotionClip<T> {
    pub fn robot(
        name: impl Into<String>,
        fps: T,
        difficulty: u8,
        layout: RobotLayout,
        frames: Vec<RobotFrame<T>>,
    ) -> Self {
        Self {
            name: name.into(),
            fps,
            difficulty,
            layout: Layout::Robot(layout),
            frames: Frames::Robot(frames),
        }
    }

    pub fn human(
        name: impl Into<String>,
        fps: T,
        difficulty: u8,
        frames: Vec<HumanMotionFrame<T>>,
    ) -> Self {
        Self {
            name: name.into(),
            fps,
            difficulty,
            layout: Layout::Human,
            frames: Frames::Human(frames),
        }
    }

    pub fn robot_frames(&self) -> Option<&[RobotFrame<T>]> {
        match &self.frames {
            Frames::Robot(f) => Some(f),
            Frames::Human(_) => None,
        }
    }

    pub fn robot_layout(&self) -> Option<&RobotLayout> {
        match &self.layout {
            Layout::Robot(l) => Some(l),
            Layout::Human => None,
        }
    }

    pub fn human_frames(&self) -> Option<&[HumanMotionFrame<T>]> {
        match &self.frames {
            Frames::Human(f) => Some(f),
            Frames::Robot(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Duration in seconds, counting each frame as one sample period.
    pub fn duration(&self) -> T {
        T::from_usize_lossy(self.len()) / self.fps
    }
}

/// Fills every velocity field of a robot clip with forward differences
/// scaled by the frame rate. The final frame repeats the previous velocity.
/// Angular velocity is the world-frame rotation vector of `q[t+1] ⊗ q[t]⁻¹`
/// times the frame rate.
pub fn finite_difference_velocities<T: Real>(clip: &MotionClip<T>) -> Result<MotionClip<T>> {
    let frames = clip.robot_frames().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "clip `{}` has no robot position fields to difference",
            clip.name
        ))
    })?;
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "clip `{}` needs at least 2 frames for finite differences, has {}",
            clip.name,
            frames.len()
        )));
    }
    let fps = clip.fps;
    let mut out = frames.to_vec();
    for t in 0..frames.len() - 1 {
        let (a, b) = (&frames[t], &frames[t + 1]);
        let n = a.n_bodies().min(b.n_bodies());
        out[t].joint_vel = a
            .joint_pos
            .iter()
            .zip(&b.joint_pos)
            .map(|(x, y)| (*y - *x) * fps)
            .collect();
        out[t].body_lin_vel = (0..n)
            .map(|i| geometry::scale(geometry::sub(b.body_pos[i], a.body_pos[i]), fps))
            .collect();
        out[t].body_ang_vel = (0..n)
            .map(|i| {
                let delta = b.body_quat[i].mul(a.body_quat[i].conj());
                geometry::scale(delta.log_vec(), fps)
            })
            .collect();
    }
    let last = frames.len() - 1;
    out[last].joint_vel = out[last - 1].joint_vel.clone();
    out[last].body_lin_vel = out[last - 1].body_lin_vel.clone();
    out[last].body_ang_vel = out[last - 1].body_ang_vel.clone();
    Ok(MotionClip {
        frames: Frames::Robot(out),
        ..clip.clone()
    })
}

/// A single broken invariant found by [`validate_clip`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub frame: Option<usize>,
    pub body: Option<usize>,
    pub field: String,
    pub message: String,
}

impl Violation {
    fn clip(field: &str, message: String) -> Self {
        Self {
            frame: None,
            body: None,
            field: field.to_string(),
            message,
        }
    }

    fn at(frame: usize, body: Option<usize>, field: &str, message: String) -> Self {
        Self {
            frame: Some(frame),
            body,
            field: field.to_string(),
            message,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = self.frame {
            write!(f, "frame {t} ")?;
        }
        if let Some(b) = self.body {
            write!(f, "body {b} ")?;
        }
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn check_width(
    out: &mut Vec<Violation>,
    t: usize,
    field: &str,
    expected: usize,
    got: usize,
) -> bool {
    if expected != got {
        out.push(Violation::at(
            t,
            None,
            field,
            format!("expected {expected} values, got {got}"),
        ));
        return false;
    }
    true
}

fn check_finite<T: Real>(out: &mut Vec<Violation>, t: usize, field: &str, values: &[T]) {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        out.push(Violation::at(
            t,
            None,
            field,
            format!("non-finite value {} at index {i}", values[i]),
        ));
    }
}

fn check_vec3s<T: Real>(out: &mut Vec<Violation>, t: usize, field: &str, values: &[Vec3<T>]) {
    for (b, v) in values.iter().enumerate() {
        if v.iter().any(|x| !x.is_finite()) {
            out.push(Violation::at(t, Some(b), field, "non-finite value".into()));
        }
    }
}

/// Lists every broken invariant; an empty list means the clip is well formed.
pub fn validate_clip<T: Real>(clip: &MotionClip<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    if clip.name.is_empty()
        || clip
            .name
            .chars()
            .any(|c| c.is_whitespace() || c.is_control())
    {
        out.push(Violation::clip(
            "name",
            format!("`{}` must be non-empty without whitespace", clip.name),
        ));
    }
    if !(clip.fps.is_finite() && clip.fps > T::zero()) {
        out.push(Violation::clip(
            "fps",
            format!("{} is not a positive real", clip.fps),
        ));
    }
    if !(MIN_DIFFICULTY..=MAX_DIFFICULTY).contains(&clip.difficulty) {
        out.push(Violation::clip(
            "difficulty",
            format!(
                "{} outside {MIN_DIFFICULTY}..={MAX_DIFFICULTY}",
                clip.difficulty
            ),
        ));
    }
    if clip.frames.is_empty() {
        out.push(Violation::clip("frames", "clip has no frames".into()));
    }
    match (&clip.layout, &clip.frames) {
        (Layout::Human, Frames::Human(frames)) => {
            for (t, f) in frames.iter().enumerate() {
                if check_width(&mut out, t, "pose", SMPL_POSE_DIM, f.pose.len()) {
                    check_finite(&mut out, t, "pose", &f.pose);
                }
                if check_width(&mut out, t, "trans", TRANSLATION_DIM, f.translation.len()) {
                    check_finite(&mut out, t, "trans", &f.translation);
                }
            }
        }
        (Layout::Robot(layout), Frames::Robot(frames)) => {
            let n = layout.body_names.len();
            if n == 0 {
                out.push(Violation::clip("bodies", "no bodies declared".into()));
            }
            if layout.anchor_index >= n {
                out.push(Violation::clip(
                    "anchor",
                    format!("anchor index {} >= {n} bodies", layout.anchor_index),
                ));
            }
            let tol = T::lit(QUAT_NORM_TOLERANCE);
            for (t, f) in frames.iter().enumerate() {
                if f.anchor_index != layout.anchor_index {
                    out.push(Violation::at(
                        t,
                        None,
                        "anchor",
                        format!(
                            "frame anchor {} differs from layout anchor {}",
                            f.anchor_index, layout.anchor_index
                        ),
                    ));
                }
                if check_width(&mut out, t, "joint_pos", JOINT_COUNT, f.joint_pos.len()) {
                    check_finite(&mut out, t, "joint_pos", &f.joint_pos);
                }
                if check_width(&mut out, t, "joint_vel", JOINT_COUNT, f.joint_vel.len()) {
                    check_finite(&mut out, t, "joint_vel", &f.joint_vel);
                }
                if check_width(&mut out, t, "body_pos", n, f.body_pos.len()) {
                    check_vec3s(&mut out, t, "body_pos", &f.body_pos);
                }
                if check_width(&mut out, t, "body_lin_vel", n, f.body_lin_vel.len()) {
                    check_vec3s(&mut out, t, "body_lin_vel", &f.body_lin_vel);
                }
                if check_width(&mut out, t, "body_ang_vel", n, f.body_ang_vel.len()) {
                    check_vec3s(&mut out, t, "body_ang_vel", &f.body_ang_vel);
                }
                if check_width(&mut out, t, "body_quat", n, f.body_quat.len()) {
                    for (b, q) in f.body_quat.iter().enumerate() {
                        if !q.is_finite() {
                            out.push(Violation::at(
                                t,
                                Some(b),
                                "body_quat",
                                "non-finite value".into(),
                            ));
                        } else if !q.is_unit(tol) {
                            out.push(Violation::at(
                                t,
                                Some(b),
                                "body_quat",
                                format!(
                                    "norm {} deviates from 1 by more than {QUAT_NORM_TOLERANCE}",
                                    q.norm()
                                ),
                            ));
                        }
                    }
                }
            }
        }
        _ => out.push(Violation::clip(
            "layout",
            "layout does not match frame kind".into(),
        )),
    }
    out
}

/// Library-wide loading options.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LibraryConfig {
    /// Number of tracked bodies every robot clip must declare.
    pub n_bodies: usize,
}

impl Default for LibraryConfig {
    fn default() -> Self {
        Self {
            n_bodies: DEFAULT_BODY_NAMES.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RobotField {
    JointPos,
    JointVel,
    BodyPos,
    BodyQuat,
    BodyLinVel,
    BodyAngVel,
}

impl RobotField {
    const ALL: [RobotField; 6] = [
        RobotField::JointPos,
        RobotField::JointVel,
        RobotField::BodyPos,
        RobotField::BodyQuat,
        RobotField::BodyLinVel,
        RobotField::BodyAngVel,
    ];

    fn name(self) -> &'static str {
        match self {
            RobotField::JointPos => "joint_pos",
            RobotField::JointVel => "joint_vel",
            RobotField::BodyPos => "body_pos",
            RobotField::BodyQuat => "body_quat",
            RobotField::BodyLinVel => "body_lin_vel",
            RobotField::BodyAngVel => "body_ang_vel",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    fn width(self, n_bodies: usize) -> usize {
        match self {
            RobotField::JointPos | RobotField::JointVel => JOINT_COUNT,
            RobotField::BodyQuat => 4 * n_bodies,
            _ => 3 * n_bodies,
        }
    }

    fn is_velocity(self) -> bool {
        matches!(
            self,
            RobotField::JointVel | RobotField::BodyLinVel | RobotField::BodyAngVel
        )
    }
}

fn parse_err(file: &str, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: Real>(file: &str, field: &str, s: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| parse_err(file, field, format!("`{s}` is not a number")))
}

fn vec3s<T: Real>(v: &[T]) -> Vec<Vec3<T>> {
    v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// Parses one clip from its text form and validates it. `file` labels errors.
pub fn parse_clip<T: Real>(text: &str, file: &str, cfg: &LibraryConfig) -> Result<MotionClip<T>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => {
            return Err(parse_err(
                file,
                "header",
                format!("first line must be `{MAGIC}`"),
            ))
        }
    }
    let mut header: HashMap<&str, &str> = HashMap::new();
    let mut saw_separator = false;
    for (_, line) in lines.by_ref() {
        let line = line.trim();
        if line == "---" {
            saw_separator = true;
            break;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once(':').ok_or_else(|| {
            parse_err(
                file,
                "header",
                format!("expected `key: value`, got `{line}`"),
            )
        })?;
        header.insert(k.trim(), v.trim());
    }
    if !saw_separator {
        return Err(parse_err(file, "header", "missing `---` separator"));
    }
    let get = |k: &str| -> Result<&str> {
        header
            .get(k)
            .copied()
            .ok_or_else(|| parse_err(file, k, "missing header record"))
    };
    let name = get("name")?.to_string();
    let fps: T = parse_num(file, "fps", get("fps")?)?;
    let difficulty: u8 = get("difficulty")?
        .parse()
        .map_err(|_| parse_err(file, "difficulty", "not an integer in 0..=255"))?;
    let n_frames: usize = get("frames")?
        .parse()
        .map_err(|_| parse_err(file, "frames", "not a frame count"))?;
    let rows: Vec<(usize, Vec<&str>)> = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split_whitespace().collect()))
        .collect();
    if rows.len() != n_frames {
        return Err(parse_err(
            file,
            "frames",
            format!("header declares {n_frames} frames, found {}", rows.len()),
        ));
    }

    let clip = match get("layout")? {
        "human" => {
            let fields: Vec<&str> = header
                .get("fields")
                .map(|f| f.split_whitespace().collect())
                .unwrap_or_else(|| vec!["pose", "trans"]);
            if fields != ["pose", "trans"] {
                return Err(parse_err(file, "fields", "human clips carry `pose trans`"));
            }
            let width = SMPL_POSE_DIM + TRANSLATION_DIM;
            let mut frames = Vec::with_capacity(n_frames);
            for (line_no, toks) in &rows {
                if toks.len() != width {
                    return Err(parse_err(
                        file,
                        "pose",
                        format!(
                            "line {line_no}: expected {width} values, got {}",
                            toks.len()
                        ),
                    ));
                }
                let vals = toks
                    .iter()
                    .map(|s| parse_num::<T>(file, "pose", s))
                    .collect::<Result<Vec<_>>>()?;
                frames.push(HumanMotionFrame {
                    pose: vals[..SMPL_POSE_DIM].to_vec(),
                    translation: vals[SMPL_POSE_DIM..].to_vec(),
                });
            }
            MotionClip::human(name, fps, difficulty, frames)
        }
        "robot" => {
            let body_names: Vec<String> = get("bodies")?
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if body_names.len() != cfg.n_bodies {
                return Err(parse_err(
                    file,
                    "bodies",
                    format!("expected {} bodies, got {}", cfg.n_bodies, body_names.len()),
                ));
            }
            let anchor_index: usize = get("anchor")?
                .parse()
                .map_err(|_| parse_err(file, "anchor", "not a body index"))?;
            let mut fields = Vec::new();
            for tok in get("fields")?.split_whitespace() {
                let f = RobotField::parse(tok)
                    .ok_or_else(|| parse_err(file, "fields", format!("unknown field `{tok}`")))?;
                if fields.contains(&f) {
                    return Err(parse_err(file, "fields", format!("`{tok}` listed twice")));
                }
                fields.push(f);
            }
            for required in [
                RobotField::JointPos,
                RobotField::BodyPos,
                RobotField::BodyQuat,
            ] {
                if !fields.contains(&required) {
                    return Err(parse_err(file, required.name(), "required field missing"));
                }
            }
            let n = body_names.len();
            let width: usize = fields.iter().map(|f| f.width(n)).sum();
            let mut frames = Vec::with_capacity(n_frames);
            for (line_no, toks) in &rows {
                if toks.len() != width {
                    return Err(parse_err(
                        file,
                        "fields",
                        format!(
                            "line {line_no}: expected {width} values, got {}",
                            toks.len()
                        ),
                    ));
                }
                let mut frame = RobotFrame::zeroed(n, anchor_index);
                let mut at = 0;
                for f in &fields {
                    let w = f.width(n);
                    let vals = toks[at..at + w]
                        .iter()
                        .map(|s| parse_num::<T>(file, f.name(), s))
                        .collect::<Result<Vec<T>>>()?;
                    at += w;
                    match f {
                        RobotField::JointPos => frame.joint_pos = vals,
                        RobotField::JointVel => frame.joint_vel = vals,
                        RobotField::BodyPos => frame.body_pos = vec3s(&vals),
                        RobotField::BodyLinVel => frame.body_lin_vel = vec3s(&vals),
                        RobotField::BodyAngVel => frame.body_ang_vel = vec3s(&vals),
                        RobotField::BodyQuat => {
                            frame.body_quat = vals
                                .chunks_exact(4)
                                .map(|c| Quat::new(c[0], c[1], c[2], c[3]))
                                .collect()
                        }
                    }
                }
                frames.push(frame);
            }
            let layout = RobotLayout {
                body_names,
                anchor_index,
            };
            let mut clip = MotionClip::robot(name, fps, difficulty, layout, frames);
            let missing: Vec<RobotField> = RobotField::ALL
                .into_iter()
                .filter(|f| f.is_velocity() && !fields.contains(f))
                .collect();
            if !missing.is_empty() {
                let filled = validated(&clip, file)
                    .and_then(|_| finite_difference_velocities(&clip))
                    .map_err(|e| match e {
                        Error::InvalidArgument(m) => parse_err(file, missing[0].name(), m),
                        other => other,
                    })?;
                let src = filled.robot_frames().expect("robot clip");
                if let Frames::Robot(dst) = &mut clip.frames {
                    for (d, s) in dst.iter_mut().zip(src) {
                        for f in &missing {
                            match f {
                                RobotField::JointVel => d.joint_vel = s.joint_vel.clone(),
                                RobotField::BodyLinVel => d.body_lin_vel = s.body_lin_vel.clone(),
                                RobotField::BodyAngVel => d.body_ang_vel = s.body_ang_vel.clone(),
                                _ => unreachable!(),
                            }
                        }
                    }
                }
            }
            clip
        }
        other => {
            return Err(parse_err(
                file,
                "layout",
                format!("unknown layout `{other}`"),
            ))
        }
    };
    validated(&clip, file)?;
    Ok(clip)
}

fn validated<T: Real>(clip: &MotionClip<T>, file: &str) -> Result<()> {
    let violations = validate_clip(clip);
    if violations.is_empty() {
        return Ok(());
    }
    Err(Error::InvalidClip {
        file: file.to_string(),
        violations: violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; "),
    })
}

fn push_row<T: Real>(row: &mut Vec<String>, vals: impl IntoIterator<Item = T>) {
    row.extend(vals.into_iter().map(|v| v.to_string()));
}

/// Text form of a clip. Always writes every field, so the output is a fixed
/// point of parse-then-serialize.
pub fn clip_to_string<T: Real>(clip: &MotionClip<T>) -> String {
    let mut s = String::new();
    s.push_str(MAGIC);
    s.push('\n');
    s.push_str(&format!("name: {}\n", clip.name));
    s.push_str(&format!("fps: {}\n", clip.fps));
    s.push_str(&format!("difficulty: {}\n", clip.difficulty));
    s.push_str(&format!("frames: {}\n", clip.len()));
    match (&clip.layout, &clip.frames) {
        (Layout::Robot(layout), Frames::Robot(frames)) => {
            s.push_str("layout: robot\n");
            s.push_str(&format!("bodies: {}\n", layout.body_names.join(",")));
            s.push_str(&format!("anchor: {}\n", layout.anchor_index));
            let names: Vec<&str> = RobotField::ALL.iter().map(|f| f.name()).collect();
            s.push_str(&format!("fields: {}\n---\n", names.join(" ")));
            for f in frames {
                let mut row = Vec::new();
                push_row(&mut row, f.joint_pos.iter().copied());
                push_row(&mut row, f.joint_vel.iter().copied());
                push_row(&mut row, f.body_pos.iter().flatten().copied());
                push_row(&mut row, f.body_quat.iter().flat_map(|q| q.to_array()));
                push_row(&mut row, f.body_lin_vel.iter().flatten().copied());
                push_row(&mut row, f.body_ang_vel.iter().flatten().copied());
                s.push_str(&row.join(" "));
                s.push('\n');
            }
        }
        (_, Frames::Human(frames)) => {
            s.push_str("layout: human\nfields: pose trans\n---\n");
            for f in frames {
                let mut row = Vec::new();
                push_row(&mut row, f.to_row());
                s.push_str(&row.join(" "));
                s.push('\n');
            }
        }
        (Layout::Human, Frames::Robot(_)) => {
            // validate_clip rejects this pairing; emit nothing parseable.
            s.push_str("layout: invalid\n---\n");
        }
    }
    s
}

pub fn read_clip<T: Real>(path: &Path, cfg: &LibraryConfig) -> Result<MotionClip<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_clip(&text, &path.display().to_string(), cfg)
}

pub fn write_clip<T: Real>(path: &Path, clip: &MotionClip<T>) -> Result<()> {
    fs::write(path, clip_to_string(clip)).map_err(|e| Error::io(path, e))
}

/// An ordered, name-indexed collection of clips. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionLibrary<T> {
    clips: Vec<MotionClip<T>>,
    files: Vec<String>,
    index: HashMap<String, usize>,
}

impl<T: Real> Default for MotionLibrary<T> {
    fn default() -> Self {
        Self {
            clips: Vec::new(),
            files: Vec::new(),
            index: HashMap::new(),
        }
    }
}

impl<T: Real> MotionLibrary<T> {
    /// Builds a library from in-memory clips, stored as `<name>.clip` and
    /// ordered by that file name.
    pub fn from_clips(clips: Vec<MotionClip<T>>) -> Result<Self> {
        let mut entries: Vec<(String, MotionClip<T>)> = clips
            .into_iter()
            .map(|c| (format!("{}.{CLIP_EXTENSION}", c.name), c))
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut lib = Self::default();
        for (file, clip) in entries {
            lib.push(file, clip)?;
        }
        Ok(lib)
    }

    fn push(&mut self, file: String, clip: MotionClip<T>) -> Result<()> {
        if let Some(&i) = self.index.get(&clip.name) {
            return Err(Error::DuplicateClip {
                name: clip.name,
                first: self.files[i].clone(),
                second: file,
            });
        }
        self.index.insert(clip.name.clone(), self.clips.len());
        self.clips.push(clip);
        self.files.push(file);
        Ok(())
    }

    pub fn clips(&self) -> &[MotionClip<T>] {
        &self.clips
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&MotionClip<T>> {
        self.index.get(name).map(|&i| &self.clips[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> Vec<String> {
        self.clips.iter().map(|c| c.name.clone()).collect()
    }

    pub fn difficulties(&self) -> Vec<u8> {
        self.clips.iter().map(|c| c.difficulty).collect()
    }

    /// `<file> <difficulty>` per clip, in library order.
    pub fn manifest(&self) -> String {
        let mut s = String::from("# file difficulty\n");
        for (file, clip) in self.files.iter().zip(&self.clips) {
            s.push_str(&format!("{file} {}\n", clip.difficulty));
        }
        s
    }

    /// Writes every clip plus the manifest into `dir` (created if needed).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (file, clip) in self.files.iter().zip(&self.clips) {
            write_clip(&dir.join(file), clip)?;
        }
        let manifest = dir.join(MANIFEST_FILE);
        fs::write(&manifest, self.manifest()).map_err(|e| Error::io(manifest, e))
    }
}

fn parse_manifest(text: &str) -> Result<Vec<(String, u8)>> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let (Some(file), Some(level), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(Error::Manifest(format!(
                "line {}: expected `<file> <difficulty>`",
                i + 1
            )));
        };
        let level = level
            .parse()
            .map_err(|_| Error::Manifest(format!("line {}: bad difficulty `{level}`", i + 1)))?;
        entries.push((file.to_string(), level));
    }
    Ok(entries)
}

/// Loads every `.clip` file in `dir` in lexicographic file-name order. When a
/// manifest is present it must agree with the clip files it lists.
pub fn load_library<T: Real>(dir: &Path, cfg: &LibraryConfig) -> Result<MotionLibrary<T>> {
    let mut files: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.path().is_file())
        .filter_map(|entry| entry.file_name().into_string().ok())
        .filter(|name| {
            Path::new(name)
                .extension()
                .is_some_and(|ext| ext == CLIP_EXTENSION)
        })
        .collect();
    files.sort();
    let mut lib = MotionLibrary::default();
    for file in files {
        let clip = read_clip(&dir.join(&file), cfg)?;
        lib.push(file, clip)?;
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.is_file() {
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        for (file, level) in parse_manifest(&text)? {
            let Some(i) = lib.files.iter().position(|f| *f == file) else {
                return Err(Error::Manifest(format!(
                    "lists `{file}` which is not in the library"
                )));
            };
            if lib.clips[i].difficulty != level {
                return Err(Error::Manifest(format!(
                    "`{file}` listed at difficulty {level}, clip says {}",
                    lib.clips[i].difficulty
                )));
            }
        }
    }
    Ok(lib)
}
