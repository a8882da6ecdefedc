#![allow(dead_code)]

use mtrack::geometry::Quat;
use mtrack::motion::{default_body_names, MotionClip, RobotFrame, RobotLayout, JOINT_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const N_BODIES: usize = 13;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_quat<R: Rng>(rng: &mut R) -> Quat<f64> {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return Quat::new(v[0] / n, v[1] / n, v[2] / n, v[3] / n);
        }
    }
}

pub fn vec3<R: Rng>(rng: &mut R, scale: f64) -> [f64; 3] {
    std::array::from_fn(|_| rng.random_range(-scale..scale))
}

pub fn random_frame<R: Rng>(rng: &mut R) -> RobotFrame<f64> {
    RobotFrame {
        joint_pos: (0..JOINT_COUNT)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect(),
        joint_vel: (0..JOINT_COUNT)
            .map(|_| rng.random_range(-5.0..5.0))
            .collect(),
        body_pos: (0..N_BODIES).map(|_| vec3(rng, 1.5)).collect(),
        body_quat: (0..N_BODIES).map(|_| unit_quat(rng)).collect(),
        body_lin_vel: (0..N_BODIES).map(|_| vec3(rng, 2.0)).collect(),
        body_ang_vel: (0..N_BODIES).map(|_| vec3(rng, 4.0)).collect(),
        anchor_index: 0,
    }
}

pub fn random_clip<R: Rng>(
    rng: &mut R,
    name: &str,
    n_frames: usize,
    difficulty: u8,
) -> MotionClip<f64> {
    let frames = (0..n_frames).map(|_| random_frame(rng)).collect();
    MotionClip::robot(name, 30.0, difficulty, RobotLayout::default(), frames)
}

pub fn still_clip(name: &str, n_frames: usize, difficulty: u8) -> MotionClip<f64> {
    let frames = vec![RobotFrame::zeroed(N_BODIES, 0); n_frames];
    MotionClip::robot(name, 30.0, difficulty, RobotLayout::default(), frames)
}

pub fn body_names() -> Vec<String> {
    default_body_names()
}

/// Rotation matrix of a unit quaternion, built entry by entry.
pub fn rot_matrix(q: Quat<f64>) -> [[f64; 3]; 3] {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    [
        [
            w * w + x * x - y * y - z * z,
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            w * w - x * x + y * y - z * z,
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            w * w - x * x - y * y + z * z,
        ],
    ]
}

pub fn mat_t_vec(m: [[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|c| (0..3).map(|r| m[r][c] * v[r]).sum())
}

pub fn mat_t_mat(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[k][i] * b[k][j]).sum()))
}

/// Rotation angle of `R_a^T R_b` from its trace.
pub fn angle_between(a: Quat<f64>, b: Quat<f64>) -> f64 {
    let m = mat_t_mat(rot_matrix(a), rot_matrix(b));
    let tr = m[0][0] + m[1][1] + m[2][2];
    ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

pub fn dist_sq(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}
