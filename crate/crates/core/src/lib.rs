//! Motion tracking training utilities for humanoid whole-body control:
//! motion data, a VQ-VAE tokenizer core, an adaptive clip scheduler, a
//! difficulty curriculum, tracking rewards, actor observations, tracking
//! metrics and a synthetic training-loop harness.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

pub mod cli;
pub mod curriculum;
pub mod error;
pub mod geometry;
pub mod matrix;
pub mod metrics;
pub mod motion;
pub mod num;
pub mod observation;
pub mod reward;
pub mod scheduler;
pub mod sim;
pub mod tokenizer;

pub use error::{Error, Result};
pub use num::Real;

pub type Quat = geometry::Quat<f64>;
pub type Clip = motion::MotionClip<f64>;
pub type Frame = motion::RobotFrame<f64>;
pub type Library = motion::MotionLibrary<f64>;
pub type Scheduler = scheduler::SchedulerState<f64>;
pub type SchedulerConfig = scheduler::SchedulerConfig<f64>;
pub type Curriculum = curriculum::CurriculumState<f64>;
pub type CurriculumConfig = curriculum::CurriculumConfig<f64>;
pub type RewardConfig = reward::RewardConfig<f64>;
pub type Codebook = tokenizer::Codebook<f64>;
pub type LossWeights = tokenizer::LossWeights<f64>;
pub type MetricReport = metrics::MetricReport<f64>;
