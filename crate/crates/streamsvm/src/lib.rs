//! Single-pass streaming l2-SVM training built on minimum-enclosing-ball
//! updates, with a lookahead buffer variant, a kernelized variant,
//! single-pass baselines, and an experiment harness.

pub mod baselines;
pub mod data;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod trainer;

pub use data::{Dataset, Example, Label, SparseVec, SynthSpec};
pub use error::{Error, Result};
pub use geometry::{Ball, MebSolverConfig, Point, SingletonPosition};
pub use model::{KernelModel, KernelSpec, LinearModel, Model};
pub use trainer::{TrainConfig, TrainTrace, XiConvention};
