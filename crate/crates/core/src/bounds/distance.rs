use serde::{Deserialize, Serialize};

use super::report::{term, BoundKind, BoundReport};
use super::tail::{varsigma, varsigma_cv, TailSpec};
use super::vc::{is_vacuous, vc_epsilon, VcParams};
use super::EigenInfo;
use crate::data::{residuals, Dataset};
use crate::error::{Error, Result};
use crate::estimators::FitResult;
use crate::scalar::{mean, Scalar};

/// Which unpenalized estimator the penalized fit is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceVariant {
    /// OLS baseline, curvature `rho` (needs n >= p).
    Ols,
    /// Forward-stagewise baseline, curvature `rho_restricted` (p > n).
    Fsr,
}

/// An unpenalized and a penalized fit trained on `train`, scored on `test`.
#[derive(Debug, Clone, Copy)]
pub struct HoldoutPair<'a, T: Scalar> {
    pub unpen: &'a FitResult<T>,
    pub pen: &'a FitResult<T>,
    pub train: &'a Dataset<T>,
    pub test: &'a Dataset<T>,
}

/// Per-split ingredients shared by the fitted-value and coefficient bounds.
struct GapParts<T: Scalar> {
    ete: T,
    ege: T,
    /// `(4/n_s) ||e_s' X_s||_inf ||b_unpen||_1`.
    endogeneity: T,
    /// `(1/n_s) ||X_s (b_unpen - b_pen)||^2`.
    fitted_gap: T,
    /// `||b_unpen - b_pen||_2^2`.
    coef_gap_sq: T,
    n_s: usize,
}

impl<'a, T: Scalar> HoldoutPair<'a, T> {
    fn parts(&self) -> Result<GapParts<T>> {
        let b = &self.unpen.coefficients;
        let e_t = residuals(b, self.train)?;
        let e_s = residuals(b, self.test)?;
        let delta = b - &self.pen.coefficients;
        if delta.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: b.len(), found: self.pen.coefficients.len() });
        }
        let n_s = self.test.n();
        let ns = T::from_usize_lossy(n_s);
        let sq = |v: &nalgebra::DVector<T>| mean(&v.iter().map(|&r| r * r).collect::<Vec<_>>());
        let sup = self.test.x().tr_mul(&e_s).iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let l1 = b.iter().fold(T::zero(), |a, v| a + v.abs());
        let xd = self.test.x() * &delta;
        Ok(GapParts {
            ete: sq(&e_t),
            ege: sq(&e_s),
            endogeneity: T::lit(4.0) / ns * sup * l1,
            fitted_gap: sq(&xd),
            coef_gap_sq: delta.norm_squared(),
            n_s,
        })
    }
}

fn curvature<T: Scalar>(eigen: &EigenInfo<T>, variant: DistanceVariant) -> Result<T> {
    let (value, which) = match variant {
        DistanceVariant::Ols => (Some(eigen.rho), "rho"),
        DistanceVariant::Fsr => (eigen.rho_restricted, "rho_restricted"),
    };
    let value = value.ok_or_else(|| Error::InvalidParameter(format!("{which} was not computed")))?;
    if !(value > T::zero()) {
        return Err(Error::ZeroEigenvalue { which });
    }
    Ok(value)
}

/// `(ga_gap, endogeneity, varsigma)` aggregated over one split or K folds.
struct Aggregate<T: Scalar> {
    epsilon: T,
    ga_gap: T,
    endogeneity: T,
    varsigma: T,
    probability: T,
    fitted_gap: T,
    coef_gap_sq: T,
    vacuous: bool,
}

fn aggregate<T: Scalar>(pairs: &[HoldoutPair<'_, T>], params: &VcParams<T>, tail: &TailSpec<T>, cv: bool) -> Result<Aggregate<T>> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no splits supplied".into()));
    }
    let parts = pairs.iter().map(HoldoutPair::parts).collect::<Result<Vec<_>>>()?;
    let avg = |f: fn(&GapParts<T>) -> T| mean(&parts.iter().map(f).collect::<Vec<_>>());
    let epsilon = vc_epsilon(params)?;
    let vacuous = is_vacuous(epsilon);
    let (ete, ege) = (avg(|p| p.ete), avg(|p| p.ege));
    let ga_gap = if vacuous { T::infinity() } else { (ete / (T::one() - epsilon.sqrt()) - ege).abs() };
    let varsigma = if cv {
        let n: usize = parts.iter().map(|p| p.n_s).sum();
        varsigma_cv(tail, T::from_usize_lossy(n) / T::from_usize_lossy(parts.len()))?
    } else {
        let n_s = T::from_usize_lossy(parts[0].n_s);
        varsigma(tail, n_s, params.n_t + n_s)?
    };
    Ok(Aggregate {
        epsilon,
        ga_gap,
        endogeneity: avg(|p| p.endogeneity),
        varsigma,
        probability: tail.confidence * (T::one() - T::one() / params.n_t),
        fitted_gap: avg(|p| p.fitted_gap),
        coef_gap_sq: avg(|p| p.coef_gap_sq),
        vacuous,
    })
}

fn finish<T: Scalar>(kind: BoundKind, a: &Aggregate<T>, bound: T, extra: Vec<(&str, T)>, observed: T) -> BoundReport<T> {
    if a.vacuous {
        return BoundReport::vacuous(kind, a.epsilon, a.varsigma, a.probability).with_observed(observed);
    }
    let mut terms = vec![term("ga_gap", a.ga_gap), term("endogeneity", a.endogeneity), term("varsigma", a.varsigma)];
    terms.extend(extra.into_iter().map(|(n, v)| term(n, v)));
    BoundReport {
        kind,
        epsilon: a.epsilon,
        varsigma: a.varsigma,
        bound,
        probability: a.probability,
        vacuous: false,
        terms,
        observed: Some(observed),
    }
}

/// Bound on the fitted-value gap `(1/n_s) ||X_s (b_unpen - b_pen)||^2`:
/// `|ete/(1-sqrt(eps)) - ege| + (4/n_s) ||e_s'X_s||_inf ||b_unpen||_1 + varsigma`,
/// with `e_t`, `e_s` the unpenalized residuals.
pub fn predicted_distance_bound<T: Scalar>(pair: &HoldoutPair<'_, T>, params: &VcParams<T>, tail: &TailSpec<T>) -> Result<BoundReport<T>> {
    let a = aggregate(std::slice::from_ref(pair), params, tail, false)?;
    let bound = a.ga_gap + a.endogeneity + a.varsigma;
    Ok(finish(BoundKind::PredictedGapValidation, &a, bound, vec![], a.fitted_gap))
}

/// Fold-averaged fitted-value gap bound; `params.n_t` is the per-round
/// training size and the slack is `varsigma_cv`.
pub fn predicted_distance_bound_cv<T: Scalar>(
    rounds: &[HoldoutPair<'_, T>],
    params: &VcParams<T>,
    tail: &TailSpec<T>,
) -> Result<BoundReport<T>> {
    let a = aggregate(rounds, params, tail, true)?;
    let bound = a.ga_gap + a.endogeneity + a.varsigma;
    Ok(finish(BoundKind::PredictedGapCv, &a, bound, vec![], a.fitted_gap))
}

/// `||b_unpen - b_pen||_2 <= sqrt(ga_gap/rho) + sqrt(endogeneity/rho) + sqrt(varsigma/rho)`,
/// with `rho` or `rho_restricted` chosen by `variant`.
pub fn l2_distance_bound<T: Scalar>(
    pair: &HoldoutPair<'_, T>,
    params: &VcParams<T>,
    tail: &TailSpec<T>,
    eigen: &EigenInfo<T>,
    variant: DistanceVariant,
) -> Result<BoundReport<T>> {
    let rho = curvature(eigen, variant)?;
    let a = aggregate(std::slice::from_ref(pair), params, tail, false)?;
    let bound = (a.ga_gap / rho).sqrt() + (a.endogeneity / rho).sqrt() + (a.varsigma / rho).sqrt();
    let aggregate = a.ga_gap + a.endogeneity + a.varsigma;
    Ok(finish(
        BoundKind::DistanceValidation,
        &a,
        bound,
        vec![("rho", rho), ("aggregate", aggregate)],
        a.coef_gap_sq.sqrt(),
    ))
}

/// Cross-validated form: bounds the fold average of the *squared*
/// distances `(1/K) sum_q ||b_unpen^q - b_pen^q||^2` by
/// `(ga_gap + endogeneity + varsigma_cv) / rho_bar`, where `eigen` holds
/// the minimum over folds.
pub fn l2_distance_bound_cv<T: Scalar>(
    rounds: &[HoldoutPair<'_, T>],
    params: &VcParams<T>,
    tail: &TailSpec<T>,
    eigen: &EigenInfo<T>,
    variant: DistanceVariant,
) -> Result<BoundReport<T>> {
    let rho = curvature(eigen, variant)?;
    let a = aggregate(rounds, params, tail, true)?;
    let aggregate = a.ga_gap + a.endogeneity + a.varsigma;
    Ok(finish(
        BoundKind::DistanceCv,
        &a,
        aggregate / rho,
        vec![("rho", rho), ("aggregate", aggregate)],
        a.coef_gap_sq,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::TailRegime;
    use crate::estimators::fit_ols;

    fn data(seed: u64, n: usize) -> Dataset<f64> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = i as f64 + seed as f64 * 0.37;
                vec![t.sin(), (1.7 * t).cos(), (0.3 * t).sin()]
            })
            .collect();
        let y = rows.iter().enumerate().map(|(i, r)| r[0] - 2.0 * r[2] + 0.1 * ((i * 7 % 5) as f64 - 2.0)).collect();
        Dataset::from_rows(y, &rows).unwrap()
    }

    #[test]
    fn coincident_fits() {
        let (train, test) = (data(1, 40), data(2, 12));
        let ols = fit_ols(&train).unwrap();
        let pair = HoldoutPair { unpen: &ols, pen: &ols, train: &train, test: &test };
        let params = VcParams::from_counts(40, 3).unwrap();
        let tail = TailSpec::new(TailRegime::Gaussian { var_u: 0.01 }, 0.95).unwrap();
        let eig = EigenInfo::from_rho(0.3);
        let pred = predicted_distance_bound(&pair, &params, &tail).unwrap();
        let dist = l2_distance_bound(&pair, &params, &tail, &eig, DistanceVariant::Ols).unwrap();
        assert_eq!(pred.observed, Some(0.0));
        assert_eq!(dist.observed, Some(0.0));
        assert!(pred.term("endogeneity").unwrap() > 0.0);
        assert_eq!(dist.term("aggregate").unwrap(), pred.bound);
    }

    #[test]
    fn zero_rho_rejected() {
        let (train, test) = (data(1, 40), data(2, 12));
        let ols = fit_ols(&train).unwrap();
        let pair = HoldoutPair { unpen: &ols, pen: &ols, train: &train, test: &test };
        let params = VcParams::from_counts(40, 3).unwrap();
        let tail = TailSpec::new(TailRegime::Gaussian { var_u: 1.0 }, 0.95).unwrap();
        let err = l2_distance_bound(&pair, &params, &tail, &EigenInfo::from_rho(0.0), DistanceVariant::Ols).unwrap_err();
        assert_eq!(err, Error::ZeroEigenvalue { which: "rho" });
    }
}
