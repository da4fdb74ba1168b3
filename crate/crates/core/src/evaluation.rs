//! eTE / eGE / R^2 / GR^2 of fitted models on a holdout split or K folds,
//! with the residuals and empirical-moment terms the distance bounds use.

use std::fmt::Write as _;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{standardize, total_sum_of_squares, Dataset, EvalResult, FoldPlan, SplitSpec};
use crate::error::{Error, Result};
use crate::estimators::{FitResult, Scaling};
use crate::scalar::{mean, pairwise_sum, Scalar};

/// One fitted model scored on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ValidationRun<T: Scalar> {
    pub fit: FitResult<T>,
    pub split: SplitSpec,
    pub eval: EvalResult<T>,
    pub residuals_train: Vec<T>,
    pub residuals_test: Vec<T>,
    /// `||e_s' X_s||_inf / n_s` on the test side.
    pub endogeneity_sup: T,
    /// The same quantity on the training side (zero for OLS up to rounding).
    pub train_endogeneity_sup: T,
}

/// K validation rounds of a fold plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CvRun<T: Scalar> {
    pub folds: FoldPlan,
    pub rounds: Vec<ValidationRun<T>>,
    pub mean_ete: T,
    pub mean_ege: T,
}

/// `(y, X)` rows for one side of a split, scaled per `scaling`.
fn side<T: Scalar>(data: &Dataset<T>, rows: &[usize], scaling: Scaling) -> Result<(DVector<T>, nalgebra::DMatrix<T>)> {
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| data.y()[i]));
    let x = data.x().select_rows(rows.iter());
    match scaling {
        Scaling::AsIs => Ok((y, x)),
        Scaling::PerPartition => {
            let (d, _) = standardize(&Dataset::new(y, x)?)?;
            Ok(d.into_parts())
        }
    }
}

fn sup_moment<T: Scalar>(x: &nalgebra::DMatrix<T>, e: &DVector<T>) -> T {
    let n = T::from_usize_lossy(e.len().max(1));
    x.tr_mul(e).iter().fold(T::zero(), |a, v| a.max(v.abs())) / n
}

/// R^2 or NaN when the partition has no spread (e.g. a single test row).
fn r2_or_nan<T: Scalar>(mse: T, y: &DVector<T>) -> T {
    let tss = total_sum_of_squares(y.as_slice());
    if tss == T::zero() {
        T::lit(f64::NAN)
    } else {
        T::one() - T::from_usize_lossy(y.len()) * mse / tss
    }
}

/// Scores `fit` on `split`. The fit must have been trained on the split's
/// training side (under the same scaling): its stored eTE is checked
/// against the recomputed one.
pub fn evaluate_holdout<T: Scalar>(fit: &FitResult<T>, data: &Dataset<T>, split: &SplitSpec, scaling: Scaling) -> Result<ValidationRun<T>> {
    if split.max_index() >= data.n() {
        return Err(Error::SplitMismatch(format!("split references row {} of {}", split.max_index(), data.n())));
    }
    if fit.coefficients.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), found: fit.coefficients.len() });
    }
    let (yt, xt) = side(data, &split.train_indices, scaling)?;
    let (ys, xs) = side(data, &split.test_indices, scaling)?;
    let et = &yt - &xt * &fit.coefficients;
    let es = &ys - &xs * &fit.coefficients;
    let sq = |v: &DVector<T>| mean(&v.iter().map(|&r| r * r).collect::<Vec<_>>());
    let (ete, ege) = (sq(&et), sq(&es));
    let tol = T::lit(1e-8) * ete.max(fit.ete).max(T::one());
    if (ete - fit.ete).abs() > tol {
        return Err(Error::SplitMismatch(format!(
            "fit reports eTE {} but scores {} on this training partition",
            fit.ete, ete
        )));
    }
    let eval = EvalResult::new(ete, ege, r2_or_nan(ete, &yt), r2_or_nan(ege, &ys));
    Ok(ValidationRun {
        fit: fit.clone(),
        split: split.clone(),
        eval,
        endogeneity_sup: sup_moment(&xs, &es),
        train_endogeneity_sup: sup_moment(&xt, &et),
        residuals_train: et.as_slice().to_vec(),
        residuals_test: es.as_slice().to_vec(),
    })
}

/// Trains `fitter` on each round's training side and scores the held-out
/// fold. Rounds run in parallel and are stored in fold order.
pub fn evaluate_cv<T, F>(fitter: F, data: &Dataset<T>, folds: &FoldPlan, scaling: Scaling) -> Result<CvRun<T>>
where
    T: Scalar,
    F: Fn(&Dataset<T>) -> Result<FitResult<T>> + Sync,
{
    folds.validate(data.n())?;
    let rounds: Vec<Result<ValidationRun<T>>> = (0..folds.k)
        .into_par_iter()
        .map(|q| {
            let split = folds.round(q)?;
            let (y, x) = side(data, &split.train_indices, scaling)?;
            let fit = fitter(&Dataset::new(y, x)?)?;
            evaluate_holdout(&fit, data, &split, scaling)
        })
        .collect();
    let rounds = rounds
        .into_iter()
        .enumerate()
        .map(|(q, r)| r.map_err(|e| Error::InFold { fold: q, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    let k = T::from_usize_lossy(folds.k);
    let mean_ete = pairwise_sum(&rounds.iter().map(|r| r.eval.ete).collect::<Vec<_>>()) / k;
    let mean_ege = pairwise_sum(&rounds.iter().map(|r| r.eval.ege).collect::<Vec<_>>()) / k;
    Ok(CvRun { folds: folds.clone(), rounds, mean_ete, mean_ege })
}

/// `||b - beta||_2`.
pub fn bias_l2<T: Scalar>(b: &DVector<T>, beta: &DVector<T>) -> Result<T> {
    if b.len() != beta.len() {
        return Err(Error::DimensionMismatch { expected: beta.len(), found: b.len() });
    }
    Ok((b - beta).norm())
}

fn row<T: Scalar>(out: &mut String, label: &str, e: &EvalResult<T>) {
    let _ = writeln!(
        out,
        "| {label} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
        e.ete.as_f64(),
        e.ege.as_f64(),
        e.r2_train.as_f64(),
        e.r2_test.as_f64(),
        e.gr2.as_f64()
    );
}

const HEADER: &str = "| | eTE | eGE | R2 train | R2 test | GR2 |\n|---|---|---|---|---|---|\n";

impl<T: Scalar> ValidationRun<T> {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from(HEADER);
        row(&mut out, "holdout", &self.eval);
        let _ = writeln!(out, "\nlambda = {}, n_t = {}, n_s = {}", self.fit.lambda, self.split.n_train(), self.split.n_test());
        out
    }
}

impl<T: Scalar> CvRun<T> {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from(HEADER);
        for (q, r) in self.rounds.iter().enumerate() {
            row(&mut out, &format!("fold {}", q + 1), &r.eval);
        }
        let _ = writeln!(out, "\nmean eTE = {:.4}, mean eGE = {:.4}", self.mean_ete.as_f64(), self.mean_ege.as_f64());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_folds, split_holdout};
    use crate::estimators::fit_ols;

    fn line(n: usize) -> Dataset<f64> {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, ((i * 3) % 4) as f64]).collect();
        let y = rows.iter().map(|r| 2.0 * r[0] - r[1]).collect();
        Dataset::from_rows(y, &rows).unwrap()
    }

    #[test]
    fn exact_fit_run() {
        let d = line(10);
        let split = split_holdout(&d, 0.3, 4).unwrap();
        let fit = fit_ols(&split.train(&d).unwrap()).unwrap();
        let run = evaluate_holdout(&fit, &d, &split, Scaling::AsIs).unwrap();
        assert!(run.eval.ete < 1e-20 && run.eval.ege < 1e-20);
        assert!(run.endogeneity_sup < 1e-9);
        assert_eq!(run.residuals_test.len(), 3);
    }

    #[test]
    fn foreign_fit_rejected() {
        let d = line(10);
        let split = split_holdout(&d, 0.3, 4).unwrap();
        let mut fit = fit_ols(&split.train(&d).unwrap()).unwrap();
        fit.ete = 5.0;
        assert!(matches!(evaluate_holdout(&fit, &d, &split, Scaling::AsIs), Err(Error::SplitMismatch(_))));
    }

    #[test]
    fn leave_one_out_exact() {
        let d = line(6);
        let run = evaluate_cv(fit_ols, &d, &make_folds(6, 6, 2).unwrap(), Scaling::AsIs).unwrap();
        assert!(run.mean_ege < 1e-20);
        assert!(run.rounds[0].eval.r2_test.is_nan());
    }

    #[test]
    fn bias_cases() {
        let beta = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(bias_l2(&beta, &beta).unwrap(), 0.0);
        assert_eq!(bias_l2(&DVector::from_vec(vec![1.0, 3.0]), &beta).unwrap(), 1.0);
        assert!(bias_l2(&DVector::from_vec(vec![1.0]), &beta).is_err());
    }
}
