//! Monte Carlo coverage of the error and distance bounds: how often the
//! observed quantity stays below its bound across seeded replications.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use gebound::bounds::{ege_bound_cv, ege_bound_validation, ols_ege_bound, DistanceVariant, Mode};
use gebound::data::{empirical_error, make_folds};
use gebound::estimators::{fit_ols, lambda_path, select_on_partitions, Scaling};
use gebound::evaluation::evaluate_cv;
use gebound::rng::derive_seed;
use gebound::{BoundReport64, Dataset64, Error, PenaltyKind, Result, TailRegime, TailSpec, VcParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Method, StudyConfig};
use crate::dgp::{generate_dgp, DgpConfig};
use crate::study::{distance_record, draw, replication_seed, COVERAGE_SLACK};

/// Folds used by the cross-validated experiment when the study sets none.
pub const DEFAULT_COVERAGE_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageKind {
    /// Holdout eGE of raw OLS vs `ete/(1-sqrt(eps)) + varsigma`, light tail
    /// with `var[Q] = 2 var_u^2` (squared Gaussian noise).
    EgeValidation,
    /// Fold-averaged eGE vs the K-fold bound, same tail.
    EgeCv,
    /// Holdout eGE of raw OLS vs the Gaussian-noise OLS bound.
    OlsGaussian,
    /// `||b_OLS - b_lasso||_2` vs its bound with curvature `rho`.
    DistanceOls,
    /// `||b_FSR - b_lasso||_2` vs its bound with the restricted eigenvalue.
    DistanceFsr,
}

impl CoverageKind {
    pub const ALL: [CoverageKind; 5] = [
        CoverageKind::EgeValidation,
        CoverageKind::EgeCv,
        CoverageKind::OlsGaussian,
        CoverageKind::DistanceOls,
        CoverageKind::DistanceFsr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoverageKind::EgeValidation => "ege-validation",
            CoverageKind::EgeCv => "ege-cv",
            CoverageKind::OlsGaussian => "ols-gaussian",
            CoverageKind::DistanceOls => "distance-ols",
            CoverageKind::DistanceFsr => "distance-fsr",
        }
    }
}

impl fmt::Display for CoverageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoverageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidParameter(format!("unknown bound kind {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTrial {
    pub rep_index: usize,
    pub seed: u64,
    pub observed: Option<f64>,
    pub bound: Option<f64>,
    pub epsilon: Option<f64>,
    pub vacuous: bool,
    /// Bound is informative and contains the observed value.
    pub covered: bool,
    pub note: Option<String>,
}

impl CoverageTrial {
    fn from_report(rep_index: usize, seed: u64, r: &BoundReport64) -> Self {
        let covered = !r.vacuous && r.observed.is_some_and(|o| o <= r.bound + COVERAGE_SLACK);
        Self {
            rep_index,
            seed,
            observed: r.observed,
            bound: Some(r.bound),
            epsilon: Some(r.epsilon),
            vacuous: r.vacuous,
            covered,
            note: None,
        }
    }

    fn failed(rep_index: usize, seed: u64, note: String) -> Self {
        Self { rep_index, seed, observed: None, bound: None, epsilon: None, vacuous: false, covered: false, note: Some(note) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub kind: CoverageKind,
    pub config: StudyConfig,
    pub trials: Vec<CoverageTrial>,
    pub covered: usize,
    pub vacuous: usize,
    pub failed: usize,
    /// `covered / trials`.
    pub fraction: f64,
    /// Nominal probability attached to the bound (when any trial produced one).
    pub nominal_probability: Option<f64>,
}

fn light_tail(study: &StudyConfig) -> Result<TailSpec<f64>> {
    let v = study.dgp.var_u;
    TailSpec::new(TailRegime::Light { variance: 2.0 * v * v }, study.confidence)
}

/// One raw (unstandardized) OLS fit on a replication's holdout split.
fn ols_holdout(study: &StudyConfig, rep: usize, gaussian: bool) -> Result<BoundReport64> {
    let d = draw(study, rep)?;
    let test = d.split.test(&d.raw)?;
    let fit = fit_ols(&d.train_raw)?;
    let ege = empirical_error(&fit.coefficients, &test)?;
    let params = VcParams::from_counts(d.train_raw.n(), d.train_raw.p())?;
    let n_s = test.n() as f64;
    let report = if gaussian {
        ols_ege_bound(fit.ete, n_s, study.dgp.var_u, &params, study.confidence, Mode::Validation)?
    } else {
        ege_bound_validation(fit.ete, &params, &light_tail(study)?, n_s)?
    };
    Ok(report.with_observed(ege))
}

/// K-fold OLS on `dgp.n` fresh rows.
fn ols_cv(study: &StudyConfig, rep: usize) -> Result<BoundReport64> {
    let seed = replication_seed(study.master_seed, rep);
    let k = study.k.unwrap_or(DEFAULT_COVERAGE_K);
    let dgp = DgpConfig { seed: derive_seed(seed, 0), ..study.dgp.clone() };
    let (data, _) = generate_dgp(&dgp)?;
    let folds = make_folds(data.n(), k, derive_seed(seed, 2))?;
    let run = evaluate_cv(|t: &Dataset64| fit_ols(t), &data, &folds, Scaling::AsIs)?;
    let n = data.n() as f64;
    let kf = k as f64;
    let params = VcParams::with_default_eta(n * (kf - 1.0) / kf, data.p() as f64)?;
    let report = ege_bound_cv(run.mean_ete, &params, &light_tail(study)?, n / kf, k)?;
    Ok(report.with_observed(run.mean_ege))
}

fn distance_trial(study: &StudyConfig, rep: usize, variant: DistanceVariant) -> std::result::Result<BoundReport64, String> {
    let fail = |e: Error| format!("{}: {e}", e.code());
    let d = draw(study, rep).map_err(fail)?;
    let grid = lambda_path(&d.train, study.lambda_grid_size, study.lambda_spacing).map_err(fail)?;
    let path = select_on_partitions(&d.train, &d.test, PenaltyKind::L1, &grid).map_err(fail)?;
    let fits = BTreeMap::from([(Method::Lasso, path.selected_fit().clone())]);
    let rec = distance_record(study, &d, &fits, variant);
    rec.report.ok_or_else(|| rec.skipped.unwrap_or_else(|| "distance bound skipped".into()))
}

fn trial(study: &StudyConfig, kind: CoverageKind, rep: usize) -> CoverageTrial {
    let seed = replication_seed(study.master_seed, rep);
    let fail = |e: Error| format!("{}: {e}", e.code());
    let report = match kind {
        CoverageKind::EgeValidation => ols_holdout(study, rep, false).map_err(fail),
        CoverageKind::OlsGaussian => ols_holdout(study, rep, true).map_err(fail),
        CoverageKind::EgeCv => ols_cv(study, rep).map_err(fail),
        CoverageKind::DistanceOls => distance_trial(study, rep, DistanceVariant::Ols),
        CoverageKind::DistanceFsr => distance_trial(study, rep, DistanceVariant::Fsr),
    };
    match report {
        Ok(r) => CoverageTrial::from_report(rep, seed, &r),
        Err(note) => CoverageTrial::failed(rep, seed, note),
    }
}

/// Runs `study.replications` independent trials of `kind`. Trials that
/// fail or yield a vacuous bound count as not covered.
pub fn coverage_experiment(study: &StudyConfig, kind: CoverageKind) -> Result<CoverageReport> {
    study.validate()?;
    let trials: Vec<CoverageTrial> = (0..study.replications).into_par_iter().map(|r| trial(study, kind, r)).collect();
    let covered = trials.iter().filter(|t| t.covered).count();
    let nominal_probability = match kind {
        CoverageKind::EgeCv => {
            let k = study.k.unwrap_or(DEFAULT_COVERAGE_K) as f64;
            Some(study.confidence * (1.0 - 1.0 / k))
        }
        _ => Some(study.confidence * (1.0 - 1.0 / study.dgp.n as f64)),
    };
    Ok(CoverageReport {
        kind,
        config: study.clone(),
        covered,
        vacuous: trials.iter().filter(|t| t.vacuous).count(),
        failed: trials.iter().filter(|t| t.note.is_some()).count(),
        fraction: covered as f64 / trials.len() as f64,
        nominal_probability,
        trials,
    })
}
