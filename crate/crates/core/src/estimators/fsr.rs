use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ols::normal_equations;
use super::{FitResult, PenaltyKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Knobs of forward stagewise regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FsrConfig<T: Scalar> {
    /// Coefficient increment per accepted step.
    pub step_size: T,
    pub max_iters: usize,
    /// Stop once every `|x_j' r| / n` falls below this.
    pub stop_tolerance: T,
}

impl<T: Scalar> FsrConfig<T> {
    pub fn new(step_size: T, max_iters: usize, stop_tolerance: T) -> Result<Self> {
        let cfg = Self { step_size, max_iters, stop_tolerance };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Step `0.01 max_j |x_j'y| / n`, tolerance 1e-3, 50,000 iterations.
    pub fn defaults_for(train: &Dataset<T>) -> Self {
        let n = T::from_usize_lossy(train.n());
        let top = train.x().tr_mul(train.y()).iter().fold(T::zero(), |a, v| a.max(v.abs())) / n;
        let step = if top > T::zero() { T::lit(0.01) * top } else { T::lit(0.01) };
        Self { step_size: step, max_iters: 50_000, stop_tolerance: T::lit(1e-3) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > T::zero()) || !self.step_size.is_finite() {
            return Err(Error::InvalidParameter("FSR step_size must be > 0".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("FSR max_iters must be >= 1".into()));
        }
        if !(self.stop_tolerance >= T::zero()) {
            return Err(Error::InvalidParameter("FSR stop_tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// Forward stagewise regression.
///
/// Each iteration moves the coefficient whose column is most correlated with
/// the residual by `+-step`. A step that would raise the training RSS (it
/// overshoots when `|x_j'r|/n < step * (x_j'x_j/n) / 2`) is not taken;
/// the step is halved instead, so RSS never increases and the iterate can
/// still approach the stop tolerance.
pub fn fit_fsr<T: Scalar>(train: &Dataset<T>, cfg: &FsrConfig<T>) -> Result<FitResult<T>> {
    cfg.validate()?;
    let (g, xty) = normal_equations(train);
    let p = train.p();
    let mut b = DVector::zeros(p);
    let mut corr = xty;
    let mut step = cfg.step_size;
    let two = T::lit(2.0);
    let mut iters = 0;
    while iters < cfg.max_iters {
        let (j, cj) = corr
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bj, bv), (k, &v)| if v.abs() > bv.abs() { (k, v) } else { (bj, bv) });
        if cj.abs() < cfg.stop_tolerance {
            break;
        }
        iters += 1;
        if step * g[(j, j)] > two * cj.abs() {
            step /= two;
            if step == T::zero() {
                break;
            }
            continue;
        }
        let delta = if cj > T::zero() { step } else { -step };
        b[j] += delta;
        corr.axpy(-delta, &g.column(j), T::one());
    }
    FitResult::new(b, PenaltyKind::None, T::zero(), iters, train)
}
