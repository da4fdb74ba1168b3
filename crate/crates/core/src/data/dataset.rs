use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Outcome vector `y` (length n) and covariate matrix `X` (n x p).
///
/// Construction checks that `y` and `X` agree on n, that n >= 2 and p >= 1,
/// and that every entry is finite. Instances are immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar> {
    y: DVector<T>,
    x: DMatrix<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(y: DVector<T>, x: DMatrix<T>) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        if y.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 observations, got {}",
                y.len()
            )));
        }
        if x.ncols() < 1 {
            return Err(Error::InvalidDataset("need at least one covariate".into()));
        }
        if !y.iter().chain(x.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite entry".into()));
        }
        Ok(Self { y, x })
    }

    /// Builds a dataset from row-major covariate rows.
    pub fn from_rows(y: Vec<T>, rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidDataset("ragged covariate rows".into()));
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(DVector::from_vec(y), x)
    }

    pub fn y(&self) -> &DVector<T> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Rows selected by `indices`, in the given order.
    ///
    /// The subset must still satisfy the dataset invariants (n >= 2).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(Error::InvalidDataset(format!(
                "row index {bad} out of range for n={}",
                self.n()
            )));
        }
        let y = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.y[i]));
        let x = self.x.select_rows(indices.iter());
        Self::new(y, x)
    }

    /// Casts every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            y: self.y.map(|v| U::lit(v.as_f64())),
            x: self.x.map(|v| U::lit(v.as_f64())),
        }
    }

    pub fn into_parts(self) -> (DVector<T>, DMatrix<T>) {
        (self.y, self.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_length_mismatch() {
        let err = Dataset::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::zeros(3, 1)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn rejects_single_row_and_nan() {
        assert!(Dataset::<f64>::from_rows(vec![1.0], &[vec![1.0]]).is_err());
        assert!(Dataset::from_rows(vec![1.0, f64::NAN], &[vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn subset_keeps_requested_order() {
        let d = Dataset::from_rows(vec![1.0, 2.0, 3.0], &[vec![10.0], vec![20.0], vec![30.0]]).unwrap();
        let s = d.subset(&[2, 0]).unwrap();
        assert_eq!(s.y().as_slice(), &[3.0, 1.0]);
        assert_eq!(s.x()[(0, 0)], 30.0);
        assert!(d.subset(&[5, 0]).is_err());
    }
}
