//! Closed-form checks computed independently of the library's solvers.

use approx::assert_relative_eq;
use gebound::bounds::{min_eigenvalue, vc_epsilon, VcParams};
use gebound::data::standardize;
use gebound::estimators::{fit_lasso, fit_ridge};
use gebound::Dataset64;
use nalgebra::DMatrix;

/// Columns are orthogonal with squared norm n, so `X'X/n = I`.
fn orthogonal_design() -> Dataset64 {
    let rows = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
    Dataset64::from_rows(vec![3.0, 1.0, 0.0, -2.0], &rows).unwrap()
}

fn soft(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

#[test]
fn lasso_on_orthogonal_design_is_soft_thresholding() {
    let d = orthogonal_design();
    // X'y/n.
    let c = [1.5, 1.0];
    for lambda in [0.0, 0.5, 1.0, 2.0, 2.5, 3.0, 4.0] {
        let fit = fit_lasso(&d, lambda).unwrap();
        for j in 0..2 {
            assert_relative_eq!(fit.coefficients[j], soft(c[j], lambda / 2.0), epsilon = 1e-9);
        }
    }
}

#[test]
fn ridge_on_orthogonal_design_shrinks_proportionally() {
    let d = orthogonal_design();
    for lambda in [0.0, 0.1, 1.0, 7.5] {
        let fit = fit_ridge(&d, lambda).unwrap();
        assert_relative_eq!(fit.coefficients[0], 1.5 / (1.0 + lambda), epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 1.0 / (1.0 + lambda), epsilon = 1e-12);
    }
}

/// Smallest root of the characteristic polynomial of a symmetric 3x3
/// matrix, by the trigonometric form of the cubic.
fn smallest_eigenvalue_3x3(a: &DMatrix<f64>) -> f64 {
    let q = a.trace() / 3.0;
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (a - DMatrix::identity(3, 3) * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

#[test]
fn min_eigenvalue_matches_characteristic_polynomial() {
    let x = DMatrix::from_fn(12, 3, |i, j| {
        let t = i as f64 + 1.0;
        match j {
            0 => t.sin(),
            1 => (0.5 * t).cos() + 0.3 * t.sin(),
            _ => 0.1 * t - 0.6,
        }
    });
    let g = x.tr_mul(&x) / 12.0;
    let oracle = smallest_eigenvalue_3x3(&g);
    assert!(oracle > 0.0);
    assert_relative_eq!(min_eigenvalue(&x), oracle, epsilon = 1e-12);
}

#[test]
fn standardization_of_polynomial_columns() {
    let n = 50usize;
    let rows: Vec<Vec<f64>> = (1..=n)
        .map(|i| {
            let t = i as f64;
            vec![t, if i % 2 == 0 { 1.0 } else { -1.0 }, t * t]
        })
        .collect();
    let y: Vec<f64> = (1..=n).map(|i| 3.0 * i as f64).collect();
    let (std, stats) = standardize(&Dataset64::from_rows(y, &rows).unwrap()).unwrap();

    let nf = n as f64;
    // Power sums of 1..n.
    let s1 = nf * (nf + 1.0) / 2.0;
    let s2 = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 6.0;
    let s4 = nf * (nf + 1.0) * (2.0 * nf + 1.0) * (3.0 * nf * nf + 3.0 * nf - 1.0) / 30.0;
    let var_t = (nf * nf - 1.0) / 12.0;
    let mean_sq = s2 / nf;
    let var_sq = s4 / nf - mean_sq * mean_sq;

    let expect_means = [s1 / nf, 0.0, mean_sq, 3.0 * s1 / nf];
    let expect_scales = [var_t.sqrt(), 1.0, var_sq.sqrt(), 3.0 * var_t.sqrt()];
    for j in 0..4 {
        assert_relative_eq!(stats.means[j], expect_means[j], epsilon = 1e-9);
        assert_relative_eq!(stats.scales[j], expect_scales[j], max_relative = 1e-12);
    }
    assert_relative_eq!(std.x()[(0, 0)], (1.0 - 25.5) / 208.25f64.sqrt(), epsilon = 1e-12);
    assert_relative_eq!(std.y()[(49, 0)], (150.0 - 76.5) / (3.0 * 208.25f64.sqrt()), epsilon = 1e-12);
}

#[test]
fn vc_epsilon_reference_value() {
    // h = 5, n_t = 100, eta = 0.05: (5 ln 20 + 5 - ln 0.05) / 100.
    let eps = vc_epsilon(&VcParams::new(100.0, 5.0, 0.05).unwrap()).unwrap();
    assert_relative_eq!(eps, 0.2297439364132394, epsilon = 1e-14);
}
