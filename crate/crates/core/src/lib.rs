//! Pool-based active learning by variance maximization.
//!
//! For every candidate in the unlabeled pool the base classifier is retrained
//! once per possible label, and the posteriors of the whole pool under each
//! retraining are collected in retraining information matrices (RIMs). Two
//! variances are read off those matrices: a per-instance column variance
//! (informativeness) and a per-candidate variance of label-flip differences
//! (representativeness). The query is the pool instance maximising their
//! product.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below name the common instantiations.

pub mod bench;
pub mod data;
pub mod linmodels;
mod matrix;
pub mod rim;
mod scalar;
pub mod strategies;
pub mod variance;

pub use bench::{ExperimentConfig, ExperimentRecord, Summary};
pub use data::{ActiveState, Dataset, Format, SplitSpec};
pub use linmodels::{LinearModel, ModelKind, TrainConfig};
pub use matrix::Matrix;
pub use rim::{BinaryRims, MulticlassRims, Trainer};
pub use scalar::Scalar;
pub use strategies::{StrategyName, StrategySpec, Weighting};
pub use variance::{Components, VarianceScores};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type LinearModel64 = LinearModel<f64>;
pub type LinearModel32 = LinearModel<f32>;
pub type TrainConfig64 = TrainConfig<f64>;
pub type TrainConfig32 = TrainConfig<f32>;
pub type BinaryRims64 = BinaryRims<f64>;
pub type BinaryRims32 = BinaryRims<f32>;
pub type MulticlassRims64 = MulticlassRims<f64>;
pub type MulticlassRims32 = MulticlassRims<f32>;
pub type VarianceScores64 = VarianceScores<f64>;
pub type VarianceScores32 = VarianceScores<f32>;
