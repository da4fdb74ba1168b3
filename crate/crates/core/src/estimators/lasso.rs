use nalgebra::{DMatrix, DVector};

use super::ols::{normal_equations, solve_spd};
use super::{FitResult, PenaltyKind};
use crate::data::{empirical_error, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Convergence threshold on the largest coefficient change in a sweep.
pub const LASSO_TOLERANCE: f64 = 1e-7;
pub const LASSO_MAX_SWEEPS: usize = 10_000;
/// Sweeps between active-set polishing steps.
const POLISH_INTERVAL: usize = 10;

fn soft_threshold<T: Scalar>(z: T, t: T) -> T {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        T::zero()
    }
}

/// Cyclic coordinate descent for `(1/n)||y - Xb||^2 + lambda ||b||_1`.
///
/// Works on the covariance form (`X'X/n`, `X'y/n`) computed once, so a path
/// of lambdas with warm starts shares the O(n p^2) setup.
///
/// Plain coordinate descent crawls on strongly correlated designs at small
/// lambda, so every few sweeps the solver also tries a polishing step: it
/// solves the stationarity equations on the current support and sign
/// pattern and moves towards that point as far as the signs allow. The
/// move is kept only if it lowers the objective, so the per-sweep
/// objective stays non-increasing.
pub struct LassoSolver<'a, T: Scalar> {
    data: &'a Dataset<T>,
    gram: DMatrix<T>,
    xty: DVector<T>,
}

impl<'a, T: Scalar> LassoSolver<'a, T> {
    pub fn new(data: &'a Dataset<T>) -> Self {
        let (gram, xty) = normal_equations(data);
        Self { data, gram, xty }
    }

    /// Coordinate descent from `warm` (or zero). If `trace` is given, the
    /// objective after every full sweep is appended to it.
    pub fn solve(&self, lambda: T, warm: Option<&DVector<T>>, mut trace: Option<&mut Vec<T>>) -> Result<FitResult<T>> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lasso lambda {lambda} must be finite and >= 0")));
        }
        let p = self.data.p();
        let mut b = warm.cloned().unwrap_or_else(|| DVector::zeros(p));
        if b.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: b.len() });
        }
        let mut gb = &self.gram * &b;
        let half = lambda / T::lit(2.0);
        let tol = T::lit(LASSO_TOLERANCE);

        for sweep in 1..=LASSO_MAX_SWEEPS {
            let mut max_delta = T::zero();
            let mut b_max = T::zero();
            for j in 0..p {
                let gjj = self.gram[(j, j)];
                if gjj <= T::zero() {
                    continue;
                }
                let z = self.xty[j] - (gb[j] - gjj * b[j]);
                let new = soft_threshold(z, half) / gjj;
                let d = new - b[j];
                if d != T::zero() {
                    gb.axpy(d, &self.gram.column(j), T::one());
                    b[j] = new;
                    max_delta = max_delta.max(d.abs());
                }
                b_max = b_max.max(new.abs());
            }
            // In f32 an absolute 1e-7 can be below the coefficient ulp.
            let floor = T::lit(16.0) * T::eps() * b_max.max(T::one());
            if max_delta < tol.max(floor) {
                if let Some(t) = trace.as_deref_mut() {
                    t.push(lasso_objective(&b, lambda, self.data)?);
                }
                return FitResult::new(b, PenaltyKind::L1, lambda, sweep, self.data);
            }
            if sweep % POLISH_INTERVAL == 0 {
                if let Some(polished) = self.polish(&b, half) {
                    gb = &self.gram * &polished;
                    b = polished;
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(lasso_objective(&b, lambda, self.data)?);
            }
        }
        Err(Error::NoConvergence { max_sweeps: LASSO_MAX_SWEEPS })
    }

    /// `-2 c'b + b'Gb + 2 half ||b||_1`: the objective up to the constant `y'y/n`.
    fn reduced_objective(&self, b: &DVector<T>, half: T) -> T {
        let l1 = b.iter().fold(T::zero(), |a, v| a + v.abs());
        (&self.gram * b).dot(b) - T::lit(2.0) * self.xty.dot(b) + T::lit(2.0) * half * l1
    }

    /// Step from `b` towards the minimizer over its support with its sign
    /// pattern fixed, stopping where the first coefficient reaches zero.
    fn polish(&self, b: &DVector<T>, half: T) -> Option<DVector<T>> {
        let active: Vec<usize> = (0..b.len()).filter(|&j| b[j] != T::zero()).collect();
        if active.is_empty() {
            return None;
        }
        let g = self.gram.select_rows(active.iter()).select_columns(active.iter());
        let rhs = DVector::from_iterator(active.len(), active.iter().map(|&j| self.xty[j] - half * b[j].signum()));
        let target = solve_spd(&g, &rhs)?;
        let mut t = T::one();
        for (k, &j) in active.iter().enumerate() {
            if target[k].signum() != b[j].signum() {
                t = t.min(b[j] / (b[j] - target[k]));
            }
        }
        let mut out = b.clone();
        for (k, &j) in active.iter().enumerate() {
            let v = b[j] + t * (target[k] - b[j]);
            out[j] = if v.signum() == b[j].signum() { v } else { T::zero() };
        }
        (out.iter().all(|v| v.is_finite()) && self.reduced_objective(&out, half) < self.reduced_objective(b, half))
            .then_some(out)
    }
}

/// `(1/n)||y - Xb||^2 + lambda ||b||_1`, evaluated from residuals.
pub(crate) fn lasso_objective<T: Scalar>(b: &DVector<T>, lambda: T, data: &Dataset<T>) -> Result<T> {
    let l1 = b.iter().fold(T::zero(), |a, v| a + v.abs());
    Ok(empirical_error(b, data)? + lambda * l1)
}

pub fn fit_lasso<T: Scalar>(train: &Dataset<T>, lambda: T) -> Result<FitResult<T>> {
    LassoSolver::new(train).solve(lambda, None, None)
}

/// [`fit_lasso`] that also returns the objective after every sweep.
pub fn fit_lasso_traced<T: Scalar>(train: &Dataset<T>, lambda: T) -> Result<(FitResult<T>, Vec<T>)> {
    let mut trace = Vec::new();
    let fit = LassoSolver::new(train).solve(lambda, None, Some(&mut trace))?;
    Ok((fit, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn zero_at_large_lambda_and_monotone_objective() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] - 0.5 * r[1]).collect();
        let d = Dataset::from_rows(y, &rows).unwrap();
        let big = fit_lasso(&d, 1e6).unwrap();
        assert!(big.coefficients.iter().all(|&v| v == 0.0));
        let (_, trace) = fit_lasso_traced(&d, 0.01).unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }
}
