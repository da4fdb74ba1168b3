use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lasso::LassoSolver;
use super::ols::{fit_ols, fit_ridge};
use super::{FitResult, PenaltyKind};
use crate::data::{standardize, Dataset, FoldPlan, SplitSpec, StandardizationStats};
use crate::error::{Error, Result};
use crate::scalar::{mean, pairwise_sum, Scalar};

/// Smallest grid value relative to lambda_max.
const GRID_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

impl std::str::FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(Spacing::Log),
            "linear" => Ok(Spacing::Linear),
            other => Err(Error::InvalidParameter(format!("unknown grid spacing {other:?}"))),
        }
    }
}

/// How partitions are scaled before fitting and scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Use the data as given.
    #[default]
    AsIs,
    /// Standardize the training and test side of every split with their own
    /// statistics. Errors are then in standardized outcome units.
    PerPartition,
}

/// `2 max_j |x_j'y| / n`: the smallest lambda whose lasso solution is zero.
///
/// Floored at machine epsilon so a grid built from it is strictly
/// decreasing even when `y` is orthogonal to every column.
pub fn lambda_max<T: Scalar>(train: &Dataset<T>) -> T {
    let n = T::from_usize_lossy(train.n());
    let top = train.x().tr_mul(train.y()).iter().fold(T::zero(), |a, v| a.max(v.abs()));
    (T::lit(2.0) * top / n).max(T::eps())
}

/// Descending grid from lambda_max to `1e-4 * lambda_max`, with 0 appended
/// when `n > p` (the OLS endpoint exists).
pub fn lambda_path<T: Scalar>(train: &Dataset<T>, n_points: usize, spacing: Spacing) -> Result<Vec<T>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter(format!("lambda grid needs >= 2 points, got {n_points}")));
    }
    let top = lambda_max(train);
    let last = T::from_usize_lossy(n_points - 1);
    let ratio = T::lit(GRID_RATIO);
    let mut grid: Vec<T> = (0..n_points)
        .map(|k| {
            let t = T::from_usize_lossy(k) / last;
            match spacing {
                Spacing::Log => top * ratio.powf(t),
                Spacing::Linear => top * (T::one() - t * (T::one() - ratio)),
            }
        })
        .collect();
    grid[n_points - 1] = top * ratio;
    if train.n() > train.p() {
        grid.push(T::zero());
    }
    Ok(grid)
}

fn validate_grid<T: Scalar>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    if grid.iter().any(|l| !l.is_finite() || *l < T::zero()) {
        return Err(Error::InvalidParameter("lambda values must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("lambda grid must be strictly decreasing".into()));
    }
    Ok(())
}

fn at_lambda<T: Scalar>(lambda: T) -> impl Fn(Error) -> Error {
    move |e| Error::AtLambda { lambda: lambda.as_f64(), source: Box::new(e) }
}

/// Fits every grid point on `train`.
///
/// Lasso runs coordinate descent with warm starts down the grid; the
/// `lambda = 0` point is the closed-form OLS fit. `PenaltyKind::None`
/// requires an all-zero grid, i.e. `{0}`.
pub fn fit_path<T: Scalar>(train: &Dataset<T>, kind: PenaltyKind, grid: &[T]) -> Result<Vec<FitResult<T>>> {
    validate_grid(grid)?;
    match kind {
        PenaltyKind::None => {
            if grid.iter().any(|&l| l != T::zero()) {
                return Err(Error::InvalidParameter("unpenalized fits take the grid {0}".into()));
            }
            Ok(vec![fit_ols(train).map_err(at_lambda(T::zero()))?])
        }
        PenaltyKind::L2 => grid.iter().map(|&l| fit_ridge(train, l).map_err(at_lambda(l))).collect(),
        PenaltyKind::L1 => {
            let solver = LassoSolver::new(train);
            let mut warm: Option<DVector<T>> = None;
            let mut fits = Vec::with_capacity(grid.len());
            for &l in grid {
                let fit = if l == T::zero() {
                    fit_ols(train).map(|f| FitResult { penalty_kind: PenaltyKind::L1, ..f })
                } else {
                    solver.solve(l, warm.as_ref(), None)
                }
                .map_err(at_lambda(l))?;
                warm = Some(fit.coefficients.clone());
                fits.push(fit);
            }
            Ok(fits)
        }
    }
}

/// Index of the minimum; ties go to the earliest entry (largest lambda).
fn argmin<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &e) in v.iter().enumerate().skip(1) {
        if e < v[best] {
            best = i;
        }
    }
    best
}

/// A lambda path scored on a single holdout split.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult<T: Scalar> {
    pub grid: Vec<T>,
    pub fits: Vec<FitResult<T>>,
    pub eges: Vec<T>,
    pub selected: usize,
    /// Statistics used for the training / test side under
    /// [`Scaling::PerPartition`].
    pub train_stats: Option<StandardizationStats<T>>,
    pub test_stats: Option<StandardizationStats<T>>,
}

/// The serializable summary of a [`PathResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PathReport<T: Scalar> {
    pub grid: Vec<T>,
    pub etes: Vec<T>,
    pub eges: Vec<T>,
    pub selected: usize,
    pub lambda: T,
    pub coefficients: Vec<T>,
}

impl<T: Scalar> PathResult<T> {
    /// b_pen, the minimum-eGE fit.
    pub fn selected_fit(&self) -> &FitResult<T> {
        &self.fits[self.selected]
    }

    pub fn selected_lambda(&self) -> T {
        self.grid[self.selected]
    }

    pub fn selected_ege(&self) -> T {
        self.eges[self.selected]
    }

    pub fn report(&self) -> PathReport<T> {
        PathReport {
            grid: self.grid.clone(),
            etes: self.fits.iter().map(|f| f.ete).collect(),
            eges: self.eges.clone(),
            selected: self.selected,
            lambda: self.selected_lambda(),
            coefficients: self.selected_fit().coefficients.as_slice().to_vec(),
        }
    }
}

/// Mean squared prediction error of `b` over the given rows of `data`.
/// Unlike a [`Dataset`], this works for a single row.
fn rows_error<T: Scalar>(b: &DVector<T>, data: &Dataset<T>, rows: &[usize]) -> T {
    let sq: Vec<T> = rows
        .iter()
        .map(|&i| {
            let r = data.y()[i] - data.x().row(i).transpose().dot(b);
            r * r
        })
        .collect();
    mean(&sq)
}

/// Training dataset and a scorer for the test side of `split`.
struct Prepared<T: Scalar> {
    train: Dataset<T>,
    test: Option<Dataset<T>>,
    train_stats: Option<StandardizationStats<T>>,
    test_stats: Option<StandardizationStats<T>>,
}

impl<T: Scalar> Prepared<T> {
    fn new(data: &Dataset<T>, split: &SplitSpec, scaling: Scaling) -> Result<Self> {
        if split.max_index() >= data.n() {
            return Err(Error::SplitMismatch(format!(
                "split references row {} of a {}-row dataset",
                split.max_index(),
                data.n()
            )));
        }
        let train = split.train(data)?;
        match scaling {
            Scaling::AsIs => Ok(Self { train, test: None, train_stats: None, test_stats: None }),
            Scaling::PerPartition => {
                let (train, ts) = standardize(&train)?;
                let (test, ss) = standardize(&split.test(data)?)?;
                Ok(Self { train, test: Some(test), train_stats: Some(ts), test_stats: Some(ss) })
            }
        }
    }

    fn ege(&self, b: &DVector<T>, data: &Dataset<T>, split: &SplitSpec) -> T {
        match &self.test {
            Some(t) => rows_error(b, t, &(0..t.n()).collect::<Vec<_>>()),
            None => rows_error(b, data, &split.test_indices),
        }
    }
}

/// Fits the path on already-prepared partitions and selects by test error.
pub fn select_on_partitions<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    kind: PenaltyKind,
    grid: &[T],
) -> Result<PathResult<T>> {
    if train.p() != test.p() {
        return Err(Error::DimensionMismatch { expected: train.p(), found: test.p() });
    }
    let fits = fit_path(train, kind, grid)?;
    let rows: Vec<usize> = (0..test.n()).collect();
    let eges: Vec<T> = fits.iter().map(|f| rows_error(&f.coefficients, test, &rows)).collect();
    let selected = argmin(&eges);
    Ok(PathResult { grid: grid.to_vec(), fits, eges, selected, train_stats: None, test_stats: None })
}

/// Validation tuning: fit every lambda on the training side of one fixed
/// split, score on the test side, keep the minimum-eGE fit.
pub fn select_by_validation<T: Scalar>(
    data: &Dataset<T>,
    kind: PenaltyKind,
    grid: &[T],
    split: &SplitSpec,
    scaling: Scaling,
) -> Result<PathResult<T>> {
    select_by_validation_with(data, grid, split, scaling, |train, grid| fit_path(train, kind, grid))
}

/// [`select_by_validation`] with a caller-supplied path fitter.
pub fn select_by_validation_with<T, F>(
    data: &Dataset<T>,
    grid: &[T],
    split: &SplitSpec,
    scaling: Scaling,
    fitter: F,
) -> Result<PathResult<T>>
where
    T: Scalar,
    F: Fn(&Dataset<T>, &[T]) -> Result<Vec<FitResult<T>>>,
{
    validate_grid(grid)?;
    let prep = Prepared::new(data, split, scaling)?;
    let fits = fitter(&prep.train, grid)?;
    if fits.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: fits.len() });
    }
    let eges: Vec<T> = fits.iter().map(|f| prep.ege(&f.coefficients, data, split)).collect();
    let selected = argmin(&eges);
    Ok(PathResult {
        grid: grid.to_vec(),
        fits,
        eges,
        selected,
        train_stats: prep.train_stats,
        test_stats: prep.test_stats,
    })
}

/// A lambda path scored by K-fold cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPathResult<T: Scalar> {
    pub grid: Vec<T>,
    /// `fold_eges[l][q]`: test error of fold `q` at grid point `l`.
    pub fold_eges: Vec<Vec<T>>,
    /// Cross-validated eGE per grid point (mean over folds).
    pub eges: Vec<T>,
    pub selected: usize,
    /// Per-fold fits `b_pen^q` at the selected lambda (trained without fold q).
    pub fold_fits: Vec<FitResult<T>>,
    /// Refit on the full sample at the selected lambda.
    pub refit: FitResult<T>,
    pub refit_stats: Option<StandardizationStats<T>>,
}

impl<T: Scalar> CvPathResult<T> {
    pub fn selected_lambda(&self) -> T {
        self.grid[self.selected]
    }

    pub fn selected_ege(&self) -> T {
        self.eges[self.selected]
    }

    /// Per-fold test errors at the selected lambda.
    pub fn selected_fold_eges(&self) -> &[T] {
        &self.fold_eges[self.selected]
    }

    /// Per-fold training errors at the selected lambda.
    pub fn selected_fold_etes(&self) -> Vec<T> {
        self.fold_fits.iter().map(|f| f.ete).collect()
    }
}

pub fn select_by_cv<T: Scalar>(
    data: &Dataset<T>,
    kind: PenaltyKind,
    grid: &[T],
    folds: &FoldPlan,
    scaling: Scaling,
) -> Result<CvPathResult<T>> {
    select_by_cv_with(data, grid, folds, scaling, |train, grid| fit_path(train, kind, grid))
}

/// Cross-validation tuning with a caller-supplied path fitter. Folds are
/// processed in parallel; results are merged in fold order.
pub fn select_by_cv_with<T, F>(
    data: &Dataset<T>,
    grid: &[T],
    folds: &FoldPlan,
    scaling: Scaling,
    fitter: F,
) -> Result<CvPathResult<T>>
where
    T: Scalar,
    F: Fn(&Dataset<T>, &[T]) -> Result<Vec<FitResult<T>>> + Sync,
{
    validate_grid(grid)?;
    folds.validate(data.n())?;
    let per_fold: Vec<Result<(Vec<FitResult<T>>, Vec<T>)>> = (0..folds.k)
        .into_par_iter()
        .map(|q| {
            let split = folds.round(q)?;
            let prep = Prepared::new(data, &split, scaling)?;
            let fits = fitter(&prep.train, grid)?;
            if fits.len() != grid.len() {
                return Err(Error::DimensionMismatch { expected: grid.len(), found: fits.len() });
            }
            let eges = fits.iter().map(|f| prep.ege(&f.coefficients, data, &split)).collect();
            Ok((fits, eges))
        })
        .collect();
    let mut fold_results = Vec::with_capacity(folds.k);
    for (q, r) in per_fold.into_iter().enumerate() {
        fold_results.push(r.map_err(|e| Error::InFold { fold: q, source: Box::new(e) })?);
    }

    let fold_eges: Vec<Vec<T>> = (0..grid.len())
        .map(|l| fold_results.iter().map(|(_, e)| e[l]).collect())
        .collect();
    let k = T::from_usize_lossy(folds.k);
    let eges: Vec<T> = fold_eges.iter().map(|e| pairwise_sum(e) / k).collect();
    let selected = argmin(&eges);
    let fold_fits = fold_results.into_iter().map(|(mut fits, _)| fits.swap_remove(selected)).collect();

    let (full, refit_stats) = match scaling {
        Scaling::AsIs => (data.clone(), None),
        Scaling::PerPartition => {
            let (d, s) = standardize(data)?;
            (d, Some(s))
        }
    };
    let lambda = grid[selected];
    let refit = fitter(&full, &[lambda])?
        .pop()
        .ok_or_else(|| Error::InvalidParameter("fitter returned no fit".into()))?;
    Ok(CvPathResult { grid: grid.to_vec(), fold_eges, eges, selected, fold_fits, refit, refit_stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_folds, split_holdout};

    fn toy(n: usize) -> Dataset<f64> {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 * 1.3).sin(), (i as f64 * 0.4).cos()]).collect();
        let y = rows.iter().map(|r| 1.5 * r[0] - r[1]).collect();
        Dataset::from_rows(y, &rows).unwrap()
    }

    #[test]
    fn grid_endpoints() {
        let d = toy(10);
        let g = lambda_path(&d, 2, Spacing::Log).unwrap();
        let top = lambda_max(&d);
        assert_eq!(g, vec![top, top * 1e-4, 0.0]);
        let lin = lambda_path(&d, 5, Spacing::Linear).unwrap();
        assert!(lin.windows(2).all(|w| w[1] < w[0]));
        assert!(lambda_path(&d, 1, Spacing::Log).is_err());
    }

    #[test]
    fn singleton_zero_grid_is_ols() {
        let d = toy(12);
        let split = split_holdout(&d, 0.25, 3).unwrap();
        let r = select_by_validation(&d, PenaltyKind::L1, &[0.0], &split, Scaling::AsIs).unwrap();
        let ols = fit_ols(&split.train(&d).unwrap()).unwrap();
        assert_eq!(r.selected_fit().coefficients, ols.coefficients);
    }

    #[test]
    fn ties_pick_largest_lambda() {
        assert_eq!(argmin(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(argmin(&[2.0, 1.0, 1.0]), 1);
    }

    #[test]
    fn leave_one_out_exact_fit() {
        let d = toy(6);
        let plan = make_folds(6, 6, 1).unwrap();
        let r = select_by_cv(&d, PenaltyKind::None, &[0.0], &plan, Scaling::AsIs).unwrap();
        assert!(r.eges[0] < 1e-20);
        assert_eq!(r.fold_fits.len(), 6);
    }

    #[test]
    fn bad_grids_rejected() {
        let d = toy(8);
        let plan = make_folds(8, 2, 0).unwrap();
        assert!(select_by_cv(&d, PenaltyKind::L1, &[0.1, 0.2], &plan, Scaling::AsIs).is_err());
        assert!(select_by_cv(&d, PenaltyKind::L1, &[], &plan, Scaling::AsIs).is_err());
    }
}
