use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::{FitResult, PenaltyKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `(X'X/n, X'y/n)`.
pub(crate) fn normal_equations<T: Scalar>(data: &Dataset<T>) -> (DMatrix<T>, DVector<T>) {
    let n = T::from_usize_lossy(data.n());
    let g = data.x().tr_mul(data.x()) / n;
    let c = data.x().tr_mul(data.y()) / n;
    (g, c)
}

/// Largest condition number of `X'X` accepted by [`fit_ols`].
fn condition_limit<T: Scalar>() -> T {
    T::lit(0.01) / T::eps()
}

fn condition_number<T: Scalar>(g: &DMatrix<T>) -> T {
    let ev = SymmetricEigen::new(g.clone()).eigenvalues;
    let hi = ev.iter().fold(T::zero(), |a, &v| a.max(v));
    let lo = ev.iter().fold(T::infinity(), |a, &v| a.min(v));
    if lo <= T::zero() {
        T::infinity()
    } else {
        hi / lo
    }
}

/// Cholesky solve with one round of iterative refinement.
pub(crate) fn solve_spd<T: Scalar>(a: &DMatrix<T>, rhs: &DVector<T>) -> Option<DVector<T>> {
    let chol = Cholesky::new(a.clone())?;
    let mut b = chol.solve(rhs);
    let r = rhs - a * &b;
    b += chol.solve(&r);
    Some(b)
}

/// Ordinary least squares via the normal equations.
pub fn fit_ols<T: Scalar>(train: &Dataset<T>) -> Result<FitResult<T>> {
    let (n, p) = (train.n(), train.p());
    if n < p {
        return Err(Error::Underdetermined { n, p });
    }
    let (g, c) = normal_equations(train);
    let cond = condition_number(&g);
    if cond > condition_limit::<T>() {
        return Err(Error::NearSingular { condition: cond.as_f64() });
    }
    let b = solve_spd(&g, &c).ok_or(Error::NearSingular { condition: f64::INFINITY })?;
    FitResult::new(b, PenaltyKind::None, T::zero(), 1, train)
}

/// Ridge with the squared penalty: minimizes `(1/n)||y - Xb||^2 + lambda ||b||_2^2`,
/// i.e. solves `(X'X/n + lambda I) b = X'y/n`. `lambda = 0` defers to [`fit_ols`].
pub fn fit_ridge<T: Scalar>(train: &Dataset<T>, lambda: T) -> Result<FitResult<T>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("ridge lambda {lambda} must be finite and >= 0")));
    }
    if lambda == T::zero() {
        return fit_ols(train).map(|f| FitResult { penalty_kind: PenaltyKind::L2, ..f });
    }
    let (mut g, c) = normal_equations(train);
    for j in 0..g.nrows() {
        g[(j, j)] += lambda;
    }
    let b = solve_spd(&g, &c).ok_or(Error::NearSingular { condition: f64::INFINITY })?;
    FitResult::new(b, PenaltyKind::L2, lambda, 1, train)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> Dataset<f64> {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, ((i * i) % 5) as f64 - 1.0]).collect();
        let y = rows.iter().map(|r| 2.0 * r[0]).collect();
        Dataset::from_rows(y, &rows).unwrap()
    }

    #[test]
    fn noiseless_line_recovered() {
        let f = fit_ols(&design()).unwrap();
        assert!((f.coefficients[0] - 2.0).abs() < 1e-8);
        assert!(f.coefficients[1].abs() < 1e-8);
        assert!(f.ete < 1e-16);
    }

    #[test]
    fn too_few_rows() {
        let rows = vec![vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![0.0; 5], vec![1.0; 5]];
        let d = Dataset::from_rows(vec![1.0, 2.0, 3.0], &rows).unwrap();
        assert_eq!(fit_ols(&d).unwrap_err(), Error::Underdetermined { n: 3, p: 5 });
    }

    #[test]
    fn duplicated_column_is_near_singular() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, i as f64]).collect();
        let d = Dataset::from_rows(vec![1.0, 3.0, 2.0, 5.0, 4.0, 6.0], &rows).unwrap();
        assert!(matches!(fit_ols(&d), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn ridge_extremes() {
        let d = design();
        let ols = fit_ols(&d).unwrap();
        let r0 = fit_ridge(&d, 0.0).unwrap();
        assert!((ols.coefficients - r0.coefficients).amax() < 1e-8);
        assert!(fit_ridge(&d, 1e12).unwrap().coefficients.norm() < 1e-6);
        assert!(fit_ridge(&d, -1.0).is_err());
    }
}
