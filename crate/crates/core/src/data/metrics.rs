use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};

/// eTE, eGE, in-sample and out-of-sample R^2, and GR^2 = R^2_t * R^2_s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvalResult<T: Scalar> {
    pub ete: T,
    pub ege: T,
    pub r2_train: T,
    pub r2_test: T,
    pub gr2: T,
}

impl<T: Scalar> EvalResult<T> {
    pub fn new(ete: T, ege: T, r2_train: T, r2_test: T) -> Self {
        Self {
            ete,
            ege,
            r2_train,
            r2_test,
            gr2: r2_train * r2_test,
        }
    }
}

/// `y - X b`.
pub fn residuals<T: Scalar>(b: &DVector<T>, data: &Dataset<T>) -> Result<DVector<T>> {
    if b.len() != data.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            found: b.len(),
        });
    }
    Ok(data.y() - data.x() * b)
}

/// Mean squared error `(1/n) ||y - X b||^2`.
pub fn empirical_error<T: Scalar>(b: &DVector<T>, data: &Dataset<T>) -> Result<T> {
    let r = residuals(b, data)?;
    Ok(mean_square(r.as_slice()))
}

pub(crate) fn mean_square<T: Scalar>(r: &[T]) -> T {
    let sq: Vec<T> = r.iter().map(|&v| v * v).collect();
    pairwise_sum(&sq) / T::from_usize_lossy(r.len().max(1))
}

/// `sum (y - mean(y))^2`.
pub fn total_sum_of_squares<T: Scalar>(y: &[T]) -> T {
    let n = T::from_usize_lossy(y.len().max(1));
    let m = pairwise_sum(y) / n;
    let dev: Vec<T> = y.iter().map(|&v| (v - m) * (v - m)).collect();
    pairwise_sum(&dev)
}

/// `1 - n * mse / TSS`, i.e. `1 - R_n / (TSS / n)`.
pub fn r_squared<T: Scalar>(mse: T, tss: T, n: usize) -> Result<T> {
    if tss == T::zero() {
        return Err(Error::ZeroTss);
    }
    Ok(T::one() - T::from_usize_lossy(n) * mse / tss)
}

/// Combines training and test errors into an [`EvalResult`].
///
/// `tss_*` are raw sums of squares about the partition mean; `n_*` the
/// partition sizes.
pub fn gr_squared<T: Scalar>(ete: T, tss_train: T, n_train: usize, ege: T, tss_test: T, n_test: usize) -> Result<EvalResult<T>> {
    let r2_train = r_squared(ete, tss_train, n_train)?;
    let r2_test = r_squared(ege, tss_test, n_test)?;
    Ok(EvalResult::new(ete, ege, r2_train, r2_test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_has_zero_error() {
        let d = Dataset::from_rows(vec![1.0, 1.0], &[vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(empirical_error(&DVector::from_vec(vec![1.0]), &d).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_half() {
        let d = Dataset::from_rows(vec![1.0, 0.0], &[vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(empirical_error(&DVector::from_vec(vec![0.0]), &d).unwrap(), 0.5);
    }

    #[test]
    fn wrong_coefficient_length() {
        let d = Dataset::from_rows(vec![1.0, 0.0], &[vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(
            empirical_error(&DVector::from_vec(vec![0.0, 1.0]), &d).unwrap_err(),
            Error::DimensionMismatch { expected: 1, found: 2 }
        );
    }

    #[test]
    fn perfect_fit_gives_unit_gr2() {
        let e = gr_squared(0.0, 4.0, 10, 0.0, 2.0, 5).unwrap();
        assert_eq!(e.gr2, 1.0);
    }

    #[test]
    fn table_row_product() {
        // Lasso, p=200, var(u)=1 row of the simulation table.
        let e = EvalResult::new(0.0, 0.0, 0.9994f64, 0.9993);
        assert!((e.gr2 - 0.99870042).abs() < 1e-12);
        assert_eq!(format!("{:.4}", e.gr2), "0.9987");
    }

    #[test]
    fn zero_factor_and_zero_tss() {
        let e = EvalResult::new(0.0, 0.0, 0.5f64, 0.0);
        assert_eq!(e.gr2, 0.0);
        assert_eq!(gr_squared(1.0, 0.0, 3, 1.0, 1.0, 3).unwrap_err(), Error::ZeroTss);
    }
}
