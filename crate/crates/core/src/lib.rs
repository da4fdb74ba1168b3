//! Penalized linear regression with validation / cross-validation tuning,
//! and finite-sample upper bounds on the generalization error of the
//! tuned model.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases fix the type to `f64`.

pub mod bounds;
pub mod data;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod rng;
pub mod scalar;

pub use bounds::{BoundReport, EigenInfo, TailRegime, TailSpec, VcParams};
pub use data::{Dataset, EvalResult, FoldPlan, SplitSpec, StandardizationStats};
pub use error::{Error, Result};
pub use evaluation::{CvRun, ValidationRun};
pub use estimators::{CvPathResult, FitResult, FsrConfig, PathResult, PenaltyKind};
pub use scalar::Scalar;

pub type Dataset64 = Dataset<f64>;
pub type EvalResult64 = EvalResult<f64>;
pub type FitResult64 = FitResult<f64>;
pub type PathResult64 = PathResult<f64>;
pub type CvPathResult64 = CvPathResult<f64>;
pub type FsrConfig64 = FsrConfig<f64>;
pub type BoundReport64 = BoundReport<f64>;
pub type TailSpec64 = TailSpec<f64>;
pub type VcParams64 = VcParams<f64>;
pub type EigenInfo64 = EigenInfo<f64>;
pub type ValidationRun64 = ValidationRun<f64>;
pub type CvRun64 = CvRun<f64>;
