use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Affine maps applied by [`standardize`].
///
/// `means` and `scales` have p+1 entries: covariates 0..p first, the outcome
/// last. Scales are population (1/n) standard deviations, so a standardized
/// column has mean 0 and `sum(v^2)/n == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StandardizationStats<T: Scalar> {
    pub means: Vec<T>,
    pub scales: Vec<T>,
}

impl<T: Scalar> StandardizationStats<T> {
    pub fn p(&self) -> usize {
        self.means.len() - 1
    }

    pub fn y_mean(&self) -> T {
        self.means[self.p()]
    }

    pub fn y_scale(&self) -> T {
        self.scales[self.p()]
    }

    /// Maps coefficients fitted on standardized data back to original units.
    /// Returns `(intercept, slopes)`.
    pub fn coefficients_to_original(&self, b: &DVector<T>) -> Result<(T, DVector<T>)> {
        let p = self.p();
        if b.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: b.len() });
        }
        let sy = self.y_scale();
        let slopes = DVector::from_fn(p, |j, _| b[j] * sy / self.scales[j]);
        let shift = (0..p).fold(T::zero(), |acc, j| acc + slopes[j] * self.means[j]);
        Ok((self.y_mean() - shift, slopes))
    }

    /// Inverse of [`Self::coefficients_to_original`] for slopes: maps a
    /// coefficient vector in original units into standardized units.
    pub fn coefficients_to_standardized(&self, beta: &DVector<T>) -> Result<DVector<T>> {
        let p = self.p();
        if beta.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: beta.len() });
        }
        let sy = self.y_scale();
        Ok(DVector::from_fn(p, |j, _| beta[j] * self.scales[j] / sy))
    }
}

fn column_stats<T: Scalar>(col: impl Iterator<Item = T> + Clone, n: usize, index: usize) -> Result<(T, T)> {
    let nt = T::from_usize_lossy(n);
    let mean = col.clone().fold(T::zero(), |a, v| a + v) / nt;
    let var = col.clone().fold(T::zero(), |a, v| a + (v - mean) * (v - mean)) / nt;
    let sd = var.sqrt();
    let magnitude = col.fold(T::zero(), |a, v| a.max(v.abs()));
    // Relative test: a column whose spread is at rounding level is constant.
    if sd <= magnitude * T::eps() * T::lit(8.0) || sd == T::zero() {
        return Err(Error::ConstantColumn { index });
    }
    Ok((mean, sd))
}

/// Centers and scales every covariate column and the outcome.
///
/// The error index for a constant outcome is `p` (the outcome's slot in the
/// stats vectors).
pub fn standardize<T: Scalar>(data: &Dataset<T>) -> Result<(Dataset<T>, StandardizationStats<T>)> {
    let (n, p) = (data.n(), data.p());
    let mut means = Vec::with_capacity(p + 1);
    let mut scales = Vec::with_capacity(p + 1);
    for j in 0..p {
        let (m, s) = column_stats(data.x().column(j).iter().copied(), n, j)?;
        means.push(m);
        scales.push(s);
    }
    let (my, sy) = column_stats(data.y().iter().copied(), n, p)?;
    means.push(my);
    scales.push(sy);

    let x = DMatrix::from_fn(n, p, |i, j| (data.x()[(i, j)] - means[j]) / scales[j]);
    let y = DVector::from_fn(n, |i, _| (data.y()[i] - my) / sy);
    Ok((Dataset::new(y, x)?, StandardizationStats { means, scales }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col_mean_sd(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        (m, var.sqrt())
    }

    #[test]
    fn three_point_example() {
        let d = Dataset::from_rows(vec![1.0, 2.0, 3.0], &[vec![2.0], vec![4.0], vec![6.0]]).unwrap();
        let (s, stats) = standardize(&d).unwrap();
        for col in [s.y().as_slice().to_vec(), s.x().column(0).iter().copied().collect()] {
            let (m, sd) = col_mean_sd(&col);
            assert!(m.abs() < 1e-12);
            assert!((sd - 1.0).abs() < 1e-12);
        }
        assert_eq!(stats.means, vec![4.0, 2.0]);
    }

    #[test]
    fn constant_covariate_rejected() {
        let d = Dataset::from_rows(vec![1.0, 2.0, 3.0], &[vec![5.0], vec![5.0], vec![5.0]]).unwrap();
        assert_eq!(standardize(&d).unwrap_err(), Error::ConstantColumn { index: 0 });
    }

    #[test]
    fn constant_outcome_reports_outcome_slot() {
        let d = Dataset::from_rows(vec![1.0, 1.0, 1.0], &[vec![1.0], vec![2.0], vec![4.0]]).unwrap();
        assert_eq!(standardize(&d).unwrap_err(), Error::ConstantColumn { index: 1 });
    }

    #[test]
    fn coefficient_maps_are_inverse() {
        let d = Dataset::from_rows(
            vec![1.0, 5.0, 2.0, 8.0],
            &[vec![1.0, 0.5], vec![3.0, -1.0], vec![2.0, 2.0], vec![7.0, 0.0]],
        )
        .unwrap();
        let (_, stats) = standardize(&d).unwrap();
        let b = DVector::from_vec(vec![0.3, -0.7]);
        let (_, raw) = stats.coefficients_to_original(&b).unwrap();
        let back = stats.coefficients_to_standardized(&raw).unwrap();
        assert!((back - b).amax() < 1e-14);
    }
}
