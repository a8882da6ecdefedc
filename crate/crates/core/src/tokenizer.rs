//! Codebook quantization and the motion tokenizer training loss, evaluated
//! as plain arithmetic over motion tensors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::motion::{MotionClip, SMPL_POSE_DIM, TRANSLATION_DIM};
use crate::num::Real;

pub const MOTION_WIDTH: usize = SMPL_POSE_DIM + TRANSLATION_DIM;
pub const DEFAULT_CODEBOOK_SIZE: usize = 2048;
pub const DEFAULT_LATENT_DIM: usize = 512;
pub const DEFAULT_DOWNSAMPLE_STAGES: u32 = 2;

/// `K × D` table of code vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook<T> {
    entries: Matrix<T>,
}

impl<T: Real> Codebook<T> {
    pub fn new(entries: Matrix<T>) -> Result<Self> {
        if entries.rows() == 0 {
            return Err(Error::InvalidArgument(
                "codebook needs at least one entry".into(),
            ));
        }
        if entries.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "codebook entries must be finite".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn size(&self) -> usize {
        self.entries.rows()
    }

    pub fn dim(&self) -> usize {
        self.entries.cols()
    }

    pub fn entry(&self, k: usize) -> &[T] {
        self.entries.row(k)
    }

    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(Matrix::load(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.entries.save(path)
    }

    /// Index of the nearest entry by Euclidean distance, with its squared
    /// distance. Ties resolve to the lowest index.
    pub fn nearest(&self, z: &[T]) -> (usize, T) {
        let mut best = (0, T::infinity());
        for k in 0..self.size() {
            let d: T = self
                .entry(k)
                .iter()
                .zip(z)
                .map(|(c, x)| (*x - *c) * (*x - *c))
                .sum();
            if d < best.1 {
                best = (k, d);
            }
        }
        best
    }
}

/// How the L1 and squared-distance terms reduce over elements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

impl Reduction {
    fn reduce<T: Real>(self, total: T, count: usize) -> T {
        match self {
            Reduction::Sum => total,
            Reduction::Mean if count == 0 => T::zero(),
            Reduction::Mean => total / T::from_usize_lossy(count),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quantized<T> {
    pub indices: Vec<usize>,
    pub quantized: Matrix<T>,
    /// Mean over all elements of `(z_e − z_q)²`.
    pub commit_sq_dist: T,
}

pub fn quantize<T: Real>(latents: &Matrix<T>, codebook: &Codebook<T>) -> Result<Quantized<T>> {
    quantize_with(latents, codebook, Reduction::Mean)
}

pub fn quantize_with<T: Real>(
    latents: &Matrix<T>,
    codebook: &Codebook<T>,
    reduction: Reduction,
) -> Result<Quantized<T>> {
    if latents.rows() > 0 && latents.cols() != codebook.dim() {
        return Err(Error::dim("latent width", codebook.dim(), latents.cols()));
    }
    let mut indices = Vec::with_capacity(latents.rows());
    let mut quantized = Matrix::zeros(latents.rows(), codebook.dim());
    let mut total = T::zero();
    for (t, z) in latents.iter_rows().enumerate() {
        let (k, d) = codebook.nearest(z);
        indices.push(k);
        quantized.row_mut(t).copy_from_slice(codebook.entry(k));
        total = total + d;
    }
    Ok(Quantized {
        indices,
        quantized,
        commit_sq_dist: reduction.reduce(total, latents.rows() * codebook.dim()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights<T> {
    pub lambda_r: T,
    pub lambda_c: T,
    pub lambda_v: T,
    pub lambda_rr: T,
    pub lambda_p: T,
}

impl<T: Real> Default for LossWeights<T> {
    fn default() -> Self {
        Self {
            lambda_r: T::lit(1.0),
            lambda_c: T::lit(0.02),
            lambda_v: T::lit(0.10),
            lambda_rr: T::lit(0.5),
            lambda_p: T::lit(0.8),
        }
    }
}

impl<T: Real> LossWeights<T> {
    pub fn scaled(&self, s: T) -> Self {
        Self {
            lambda_r: self.lambda_r * s,
            lambda_c: self.lambda_c * s,
            lambda_v: self.lambda_v * s,
            lambda_rr: self.lambda_rr * s,
            lambda_p: self.lambda_p * s,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.lambda_r,
            self.lambda_c,
            self.lambda_v,
            self.lambda_rr,
            self.lambda_p,
        ];
        if all.iter().any(|w| !(w.is_finite() && *w >= T::zero())) {
            return Err(Error::Config(
                "loss weights must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// `frames × 69` motion: 66 SMPL pose values then 3 translation values. The
/// first three pose values are the global root orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionTensor<T> {
    data: Matrix<T>,
}

impl<T: Real> MotionTensor<T> {
    pub fn new(data: Matrix<T>) -> Result<Self> {
        if data.rows() > 0 && data.cols() != MOTION_WIDTH {
            return Err(Error::dim("motion tensor width", MOTION_WIDTH, data.cols()));
        }
        if data.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "motion tensor values must be finite".into(),
            ));
        }
        Ok(Self { data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Converts a human-space clip.
    pub fn from_clip(clip: &MotionClip<T>) -> Result<Self> {
        let frames = clip.human_frames().ok_or_else(|| {
            Error::InvalidArgument(format!("clip `{}` is not a human-space clip", clip.name))
        })?;
        let rows: Vec<Vec<T>> = frames.iter().map(|f| f.to_row()).collect();
        Self::from_rows(&rows)
    }

    pub fn frames(&self) -> usize {
        self.data.rows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.data
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossTerms<T> {
    pub recons: T,
    pub commit: T,
    pub vel: T,
    pub rot: T,
    pub trans: T,
}

impl<T: Real> LossTerms<T> {
    pub fn named(&self) -> [(&'static str, T); 5] {
        [
            ("recons", self.recons),
            ("commit", self.commit),
            ("vel", self.vel),
            ("rot", self.rot),
            ("trans", self.trans),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Loss<T> {
    pub total: T,
    pub terms: LossTerms<T>,
}

pub fn vqvae_loss<T: Real>(
    gt: &MotionTensor<T>,
    recon: &MotionTensor<T>,
    commit_sq_dist: T,
    fps: T,
    weights: &LossWeights<T>,
) -> Result<Loss<T>> {
    vqvae_loss_with(gt, recon, commit_sq_dist, fps, weights, Reduction::Mean)
}

/// The five-term objective. Velocities are forward differences times `fps`;
/// with `fps = 1` the velocity term compares raw frame differences.
pub fn vqvae_loss_with<T: Real>(
    gt: &MotionTensor<T>,
    recon: &MotionTensor<T>,
    commit_sq_dist: T,
    fps: T,
    weights: &LossWeights<T>,
    reduction: Reduction,
) -> Result<Loss<T>> {
    if gt.frames() != recon.frames() {
        return Err(Error::dim(
            "reconstruction frames",
            gt.frames(),
            recon.frames(),
        ));
    }
    if !(commit_sq_dist.is_finite() && commit_sq_dist >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "commitment distance {commit_sq_dist} must be finite and nonnegative"
        )));
    }
    if !(fps.is_finite() && fps > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "fps {fps} must be positive"
        )));
    }
    weights.validate()?;
    let (a, b) = (gt.matrix(), recon.matrix());
    let n = a.rows();

    let l1 = |cols: std::ops::Range<usize>| -> T {
        let mut total = T::zero();
        for t in 0..n {
            for c in cols.clone() {
                total = total + (a.get(t, c) - b.get(t, c)).abs();
            }
        }
        reduction.reduce(total, n * cols.len())
    };
    let recons = l1(0..MOTION_WIDTH);
    let rot = l1(0..3);
    let trans = l1(SMPL_POSE_DIM..MOTION_WIDTH);

    let mut vel_total = T::zero();
    for t in 1..n {
        for c in 0..MOTION_WIDTH {
            let dv_gt = (a.get(t, c) - a.get(t - 1, c)) * fps;
            let dv_rc = (b.get(t, c) - b.get(t - 1, c)) * fps;
            vel_total = vel_total + (dv_gt - dv_rc).abs();
        }
    }
    let vel = reduction.reduce(vel_total, n.saturating_sub(1) * MOTION_WIDTH);

    let terms = LossTerms {
        recons,
        commit: commit_sq_dist,
        vel,
        rot,
        trans,
    };
    let total = weights.lambda_r * recons
        + weights.lambda_c * commit_sq_dist
        + weights.lambda_v * vel
        + weights.lambda_rr * rot
        + weights.lambda_p * trans;
    Ok(Loss { total, terms })
}

/// Latent sequence length after `n_down` stride-2 encoder stages.
pub fn downsample_length(n_frames: usize, n_down: u32) -> Result<usize> {
    let factor = 1usize
        .checked_shl(n_down)
        .filter(|f| *f > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{n_down} downsample stages overflow")))?;
    if !n_frames.is_multiple_of(factor) {
        return Err(Error::InvalidArgument(format!(
            "{n_frames} frames not divisible by 2^{n_down} = {factor}"
        )));
    }
    Ok(n_frames / factor)
}
