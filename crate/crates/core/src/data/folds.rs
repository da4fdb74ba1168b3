use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

/// A training/test partition of row indices (0-based, each side sorted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

impl SplitSpec {
    /// Validates disjointness and non-emptiness; indices are sorted.
    pub fn new(mut train_indices: Vec<usize>, mut test_indices: Vec<usize>, seed: u64) -> Result<Self> {
        train_indices.sort_unstable();
        test_indices.sort_unstable();
        if train_indices.is_empty() || test_indices.is_empty() {
            return Err(Error::DegenerateSplit {
                n_train: train_indices.len(),
                n_test: test_indices.len(),
            });
        }
        let overlap = train_indices.iter().any(|i| test_indices.binary_search(i).is_ok());
        let dup = train_indices.windows(2).any(|w| w[0] == w[1]) || test_indices.windows(2).any(|w| w[0] == w[1]);
        if overlap || dup {
            return Err(Error::InvalidParameter("split index sets must be disjoint and duplicate-free".into()));
        }
        Ok(Self { train_indices, test_indices, seed })
    }

    pub fn n_train(&self) -> usize {
        self.train_indices.len()
    }

    pub fn n_test(&self) -> usize {
        self.test_indices.len()
    }

    /// min{n_s, n_t}.
    pub fn n_tilde(&self) -> usize {
        self.n_train().min(self.n_test())
    }

    /// Largest index referenced by either side.
    pub fn max_index(&self) -> usize {
        let a = self.train_indices.last().copied().unwrap_or(0);
        let b = self.test_indices.last().copied().unwrap_or(0);
        a.max(b)
    }

    pub fn train<T: Scalar>(&self, data: &Dataset<T>) -> Result<Dataset<T>> {
        data.subset(&self.train_indices)
    }

    /// The test partition. A single-row test set cannot form a [`Dataset`]
    /// (n >= 2), so callers that need one-row test sets use the raw rows.
    pub fn test<T: Scalar>(&self, data: &Dataset<T>) -> Result<Dataset<T>> {
        data.subset(&self.test_indices)
    }
}

/// Uniform random holdout split with `n_s = round(n * test_fraction)`.
pub fn split_holdout<T: Scalar>(data: &Dataset<T>, test_fraction: f64, seed: u64) -> Result<SplitSpec> {
    split_holdout_n(data.n(), test_fraction, seed)
}

/// [`split_holdout`] on a bare sample size.
pub fn split_holdout_n(n: usize, test_fraction: f64, seed: u64) -> Result<SplitSpec> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("test fraction {test_fraction} not in (0,1)")));
    }
    let n_test = (n as f64 * test_fraction).round() as usize;
    let n_train = n.saturating_sub(n_test);
    if n_test < 1 || n_train < 2 {
        return Err(Error::DegenerateSplit { n_train, n_test });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let test = perm[..n_test].to_vec();
    let train = perm[n_test..].to_vec();
    SplitSpec::new(train, test, seed)
}

/// K disjoint folds covering `0..n`; sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    /// Round `q`: fold `q` is the test set, the other folds train.
    pub fn round(&self, q: usize) -> Result<SplitSpec> {
        if q >= self.k {
            return Err(Error::InvalidParameter(format!("round {q} >= K={}", self.k)));
        }
        let train: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != q)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        SplitSpec::new(train, self.folds[q].clone(), self.seed)
    }

    /// Checks the partition invariants against a sample of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k < 2 || self.k > n || self.folds.len() != self.k {
            return Err(Error::BadK { k: self.k, n });
        }
        let mut seen = vec![false; n];
        for &i in self.folds.iter().flatten() {
            if i >= n || seen[i] {
                return Err(Error::InvalidParameter(format!("fold index {i} repeated or out of range")));
            }
            seen[i] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidParameter("folds do not cover the sample".into()));
        }
        let (lo, hi) = self
            .folds
            .iter()
            .map(Vec::len)
            .fold((usize::MAX, 0), |(lo, hi), l| (lo.min(l), hi.max(l)));
        if hi - lo > 1 {
            return Err(Error::InvalidParameter("fold sizes differ by more than one".into()));
        }
        Ok(())
    }
}

/// Random K-fold partition of `0..n`; the first `n mod K` folds get the
/// extra element.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::BadK { k, n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for q in 0..k {
        let len = base + usize::from(q < extra);
        let mut fold = perm[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(FoldPlan { k, folds, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holdout_ten_thirty_percent() {
        let s = split_holdout_n(10, 0.3, 7).unwrap();
        assert_eq!((s.n_train(), s.n_test()), (7, 3));
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(s, split_holdout_n(10, 0.3, 7).unwrap());
    }

    #[test]
    fn holdout_that_empties_train_is_rejected() {
        assert_eq!(
            split_holdout_n(4, 0.9, 1).unwrap_err(),
            Error::DegenerateSplit { n_train: 0, n_test: 4 }
        );
        assert!(matches!(split_holdout_n(3, 0.5, 1), Err(Error::DegenerateSplit { .. })));
    }

    #[test]
    fn fold_sizes() {
        let sizes = |n, k| {
            let mut s: Vec<usize> = make_folds(n, k, 3).unwrap().folds.iter().map(Vec::len).collect();
            s.sort_unstable_by(|a, b| b.cmp(a));
            s
        };
        assert_eq!(sizes(10, 5), vec![2; 5]);
        assert_eq!(sizes(10, 3), vec![4, 3, 3]);
        assert_eq!(make_folds(5, 6, 0).unwrap_err(), Error::BadK { k: 6, n: 5 });
        assert_eq!(make_folds(5, 1, 0).unwrap_err(), Error::BadK { k: 1, n: 5 });
    }

    #[test]
    fn rounds_are_complementary() {
        let plan = make_folds(11, 4, 21).unwrap();
        plan.validate(11).unwrap();
        for q in 0..4 {
            let r = plan.round(q).unwrap();
            assert_eq!(r.n_train() + r.n_test(), 11);
            assert_eq!(r.test_indices, plan.folds[q]);
        }
    }
}
