//! OLS, ridge, lasso and forward stagewise regression, the lambda grid, and
//! minimum-eGE tuning on a holdout split or K folds.

mod fsr;
mod lasso;
mod ols;
mod path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::{empirical_error, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use fsr::{fit_fsr, FsrConfig};
pub use lasso::{fit_lasso, fit_lasso_traced, LassoSolver, LASSO_MAX_SWEEPS, LASSO_TOLERANCE};
pub use ols::{fit_ols, fit_ridge};
pub use path::{
    fit_path, lambda_max, lambda_path, select_by_cv, select_by_cv_with, select_by_validation, select_by_validation_with,
    select_on_partitions, CvPathResult, PathReport, PathResult, Scaling, Spacing,
};

/// Which penalty the fit used. `None` covers OLS and forward stagewise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    None,
    L1,
    L2,
}

impl PenaltyKind {
    /// Maps the exponent of the `||b||_gamma^gamma` family onto a supported
    /// penalty. Only gamma = 1 (lasso) and gamma = 2 (ridge) are convex and
    /// supported.
    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if gamma == 1.0 {
            Ok(PenaltyKind::L1)
        } else if gamma == 2.0 {
            Ok(PenaltyKind::L2)
        } else if gamma > 0.0 && gamma < 1.0 {
            Err(Error::UnsupportedPenalty(format!("gamma={gamma} gives a non-convex penalty")))
        } else {
            Err(Error::UnsupportedPenalty(format!("gamma={gamma}")))
        }
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "ols" => Ok(PenaltyKind::None),
            "l1" | "lasso" => Ok(PenaltyKind::L1),
            "l2" | "ridge" => Ok(PenaltyKind::L2),
            other => Err(Error::UnsupportedPenalty(other.to_string())),
        }
    }
}

/// A fitted coefficient vector with its training error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FitResult<T: Scalar> {
    #[serde(with = "crate::scalar::dvector_serde")]
    pub coefficients: DVector<T>,
    pub penalty_kind: PenaltyKind,
    pub lambda: T,
    /// `(1/n) ||y - X b||^2` on the training data.
    pub ete: T,
    pub iterations: usize,
}

impl<T: Scalar> FitResult<T> {
    pub(crate) fn new(
        coefficients: DVector<T>,
        penalty_kind: PenaltyKind,
        lambda: T,
        iterations: usize,
        train: &Dataset<T>,
    ) -> Result<Self> {
        let ete = empirical_error(&coefficients, train)?;
        Ok(Self { coefficients, penalty_kind, lambda, ete, iterations })
    }

    pub fn l1_norm(&self) -> T {
        self.coefficients.iter().fold(T::zero(), |a, v| a + v.abs())
    }
}
