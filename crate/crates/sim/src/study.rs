//! Replicated lasso-vs-baseline studies.
//!
//! Every replication draws `round(n / (1 - f))` rows, splits them with
//! test fraction `f` and standardizes each partition with its own
//! statistics. Fitting happens in standardized coordinates; errors and
//! bias are reported in raw outcome units (the standardized values are
//! kept alongside).

use std::collections::BTreeMap;

use gebound::bounds::{
    is_vacuous, l2_distance_bound, min_eigenvalue, restricted_min_eigenvalue, vc_epsilon, BoundKind, DistanceVariant,
    HoldoutPair, ReMode, EXACT_MAX_P,
};
use gebound::data::{make_folds, split_holdout_n, standardize};
use gebound::estimators::{
    fit_fsr, fit_ols, lambda_max, lambda_path, select_by_cv, select_on_partitions, Scaling,
};
use gebound::evaluation::{bias_l2, evaluate_cv, evaluate_holdout};
use gebound::rng::derive_seed;
use gebound::{
    BoundReport64, Dataset64, EigenInfo, Error, FitResult64, FsrConfig, PenaltyKind, Result, SplitSpec, StandardizationStats,
    TailRegime, TailSpec, VcParams,
};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Method, StudyConfig};
use crate::dgp::{generate_dgp, DgpConfig};

/// Seed streams derived from a replication seed.
const STREAM_DGP: u64 = 0;
const STREAM_SPLIT: u64 = 1;
const STREAM_FOLDS: u64 = 2;

/// Slack used when comparing an observed quantity with its bound.
pub const COVERAGE_SLACK: f64 = 1e-12;

/// Fitted-model metrics for one method in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    /// Selected penalty (penalized methods only).
    pub lambda: Option<f64>,
    /// eTE / eGE in raw outcome units.
    pub ete: f64,
    pub ege: f64,
    pub ete_std: f64,
    pub ege_std: f64,
    pub r2_train: f64,
    pub r2_test: f64,
    pub gr2: f64,
    /// `||b_raw - beta||_2` with `b_raw` de-standardized by the training scales.
    pub bias: f64,
    /// `||b - beta_std||_2` in the training partition's standardized units.
    pub bias_std: f64,
    /// Mean K-fold CV eGE on the training partition (raw units), when `k` is set.
    pub cv_ege: Option<f64>,
    pub iterations: usize,
    /// Coefficients in raw units.
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MethodOutcome {
    Ok(MethodMetrics),
    /// The method cannot be fitted on this design (e.g. OLS with p > n).
    Infeasible { reason: String },
    Failed { code: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub method: Method,
    #[serde(flatten)]
    pub outcome: MethodOutcome,
}

impl MethodRecord {
    pub fn metrics(&self) -> Option<&MethodMetrics> {
        match &self.outcome {
            MethodOutcome::Ok(m) => Some(m),
            _ => None,
        }
    }
}

/// Coefficient-distance bound between the penalized fit and its
/// unpenalized baseline (OLS when `n_t > p`, FSR otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub variant: Option<DistanceVariant>,
    pub report: Option<BoundReport64>,
    /// Why no bound was computed.
    pub skipped: Option<String>,
    /// Bound is informative (non-vacuous) and contains the observed distance.
    pub dominated: bool,
}

impl DistanceRecord {
    fn skipped(variant: Option<DistanceVariant>, reason: impl Into<String>) -> Self {
        Self { variant, report: None, skipped: Some(reason.into()), dominated: false }
    }

    fn from_report(variant: DistanceVariant, report: BoundReport64) -> Self {
        let dominated = !report.vacuous && report.observed.is_some_and(|o| o <= report.bound + COVERAGE_SLACK);
        Self { variant: Some(variant), report: Some(report), skipped: None, dominated }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep_index: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub methods: Vec<MethodRecord>,
    pub distance: DistanceRecord,
}

impl ReplicationRecord {
    pub fn method(&self, m: Method) -> Option<&MethodRecord> {
        self.methods.iter().find(|r| r.method == m)
    }
}

/// Column means over the replications where a method succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub fitted: usize,
    pub infeasible: usize,
    pub failed: usize,
    pub bias: f64,
    pub bias_std: f64,
    pub ete: f64,
    pub ege: f64,
    pub r2_train: f64,
    pub r2_test: f64,
    pub gr2: f64,
    pub cv_ege: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DominanceTally {
    /// Replications where a distance bound was computed.
    pub computed: usize,
    pub dominated: usize,
    pub vacuous: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub replications: Vec<ReplicationRecord>,
    pub summaries: Vec<MethodSummary>,
    pub dominance: DominanceTally,
}

impl StudyReport {
    pub fn summary(&self, m: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == m)
    }

    /// Replications where both methods were fitted, and how many of them
    /// had `a` strictly below `b` in raw eGE.
    pub fn ege_wins(&self, a: Method, b: Method) -> (usize, usize) {
        let mut compared = 0;
        let mut wins = 0;
        for r in &self.replications {
            let ma = r.method(a).and_then(MethodRecord::metrics);
            let mb = r.method(b).and_then(MethodRecord::metrics);
            if let (Some(ma), Some(mb)) = (ma, mb) {
                compared += 1;
                wins += usize::from(ma.ege < mb.ege);
            }
        }
        (compared, wins)
    }
}

/// Seed of replication `rep_index`; the replication is re-runnable alone.
pub fn replication_seed(master_seed: u64, rep_index: usize) -> u64 {
    derive_seed(master_seed, rep_index as u64)
}

/// One replication's data, already split and standardized.
pub(crate) struct Draw {
    pub seed: u64,
    pub raw: Dataset64,
    pub beta: DVector<f64>,
    pub split: SplitSpec,
    pub train_raw: Dataset64,
    pub train: Dataset64,
    pub test: Dataset64,
    pub train_stats: StandardizationStats<f64>,
    pub test_stats: StandardizationStats<f64>,
}

pub(crate) fn draw(study: &StudyConfig, rep_index: usize) -> Result<Draw> {
    let seed = replication_seed(study.master_seed, rep_index);
    let n_total = study.sample_size();
    let dgp = DgpConfig { n: n_total, seed: derive_seed(seed, STREAM_DGP), ..study.dgp.clone() };
    let (raw, beta) = generate_dgp(&dgp)?;
    let split = split_holdout_n(n_total, study.holdout_fraction, derive_seed(seed, STREAM_SPLIT))?;
    let train_raw = split.train(&raw)?;
    let (train, train_stats) = standardize(&train_raw)?;
    let (test, test_stats) = standardize(&split.test(&raw)?)?;
    Ok(Draw { seed, raw, beta, split, train_raw, train, test, train_stats, test_stats })
}

fn fsr_config(study: &StudyConfig, train: &Dataset64) -> Result<FsrConfig<f64>> {
    // lambda_max = 2 max|x_j'y|/n.
    let step = study.fsr.step_scale * lambda_max(train) / 2.0;
    FsrConfig::new(step, study.fsr.max_iters, study.fsr.stop_tolerance)
}

/// Fits one method on the standardized training partition; also returns
/// the CV eGE (standardized units) when folds are configured.
fn fit_method(study: &StudyConfig, d: &Draw, method: Method, grid: &[f64]) -> Result<(FitResult64, Option<f64>)> {
    let folds = study
        .k
        .map(|k| make_folds(d.train_raw.n(), k, derive_seed(d.seed, STREAM_FOLDS)))
        .transpose()?;
    match method {
        Method::Lasso | Method::Ridge => {
            let kind = if method == Method::Lasso { PenaltyKind::L1 } else { PenaltyKind::L2 };
            match &folds {
                Some(f) => {
                    let cv = select_by_cv(&d.train_raw, kind, grid, f, Scaling::PerPartition)?;
                    let ege = cv.selected_ege();
                    Ok((cv.refit, Some(ege)))
                }
                None => {
                    let path = select_on_partitions(&d.train, &d.test, kind, grid)?;
                    Ok((path.selected_fit().clone(), None))
                }
            }
        }
        Method::Ols => {
            let fit = fit_ols(&d.train)?;
            let cv = match &folds {
                Some(f) => Some(evaluate_cv(|t: &Dataset64| fit_ols(t), &d.train_raw, f, Scaling::PerPartition)?.mean_ege),
                None => None,
            };
            Ok((fit, cv))
        }
        Method::Fsr => {
            let fit = fit_fsr(&d.train, &fsr_config(study, &d.train)?)?;
            let cv = match &folds {
                Some(f) => Some(
                    evaluate_cv(
                        |t: &Dataset64| fit_fsr(t, &fsr_config(study, t)?),
                        &d.train_raw,
                        f,
                        Scaling::PerPartition,
                    )?
                    .mean_ege,
                ),
                None => None,
            };
            Ok((fit, cv))
        }
    }
}

fn metrics(d: &Draw, fit: &FitResult64, cv_ege_std: Option<f64>) -> Result<MethodMetrics> {
    let run = evaluate_holdout(fit, &d.raw, &d.split, Scaling::PerPartition)?;
    let var_train = d.train_stats.y_scale().powi(2);
    let var_test = d.test_stats.y_scale().powi(2);
    let (_, b_raw) = d.train_stats.coefficients_to_original(&fit.coefficients)?;
    let beta_std = d.train_stats.coefficients_to_standardized(&d.beta)?;
    Ok(MethodMetrics {
        lambda: (fit.penalty_kind != PenaltyKind::None).then_some(fit.lambda),
        ete: run.eval.ete * var_train,
        ege: run.eval.ege * var_test,
        ete_std: run.eval.ete,
        ege_std: run.eval.ege,
        r2_train: run.eval.r2_train,
        r2_test: run.eval.r2_test,
        gr2: run.eval.gr2,
        bias: bias_l2(&b_raw, &d.beta)?,
        bias_std: bias_l2(&fit.coefficients, &beta_std)?,
        cv_ege: cv_ege_std.map(|e| e * var_train),
        iterations: fit.iterations,
        coefficients: b_raw.as_slice().to_vec(),
    })
}

fn outcome_of_error(method: Method, e: Error) -> MethodOutcome {
    match e {
        Error::Underdetermined { .. } if method == Method::Ols => {
            MethodOutcome::Infeasible { reason: format!("OLS is infeasible: {e}") }
        }
        e => MethodOutcome::Failed { code: e.code().to_string(), message: e.to_string() },
    }
}

/// Noise model of the distance bound, in the training partition's
/// standardized units.
fn distance_tail(study: &StudyConfig, d: &Draw) -> Result<TailSpec<f64>> {
    let var_u = study.dgp.var_u / d.train_stats.y_scale().powi(2);
    TailSpec::new(TailRegime::Gaussian { var_u }, study.confidence)
}

/// Baseline used by a replication: OLS when `n_t > p`, FSR otherwise.
pub fn default_variant(n_t: usize, p: usize) -> DistanceVariant {
    if n_t > p {
        DistanceVariant::Ols
    } else {
        DistanceVariant::Fsr
    }
}

pub(crate) fn distance_record(
    study: &StudyConfig,
    d: &Draw,
    fits: &BTreeMap<Method, FitResult64>,
    variant: DistanceVariant,
) -> DistanceRecord {
    let pen = match fits.get(&Method::Lasso).or_else(|| fits.get(&Method::Ridge)) {
        Some(f) => f,
        None => return DistanceRecord::skipped(None, "no penalized fit"),
    };
    let (n_t, p) = (d.train.n(), d.train.p());
    if variant == DistanceVariant::Fsr && p > EXACT_MAX_P {
        return DistanceRecord::skipped(
            Some(variant),
            format!("p={p} > n_t={n_t} needs the restricted eigenvalue, exact only for p <= {EXACT_MAX_P}"),
        );
    }
    match distance_bound(study, d, pen, fits, variant) {
        Ok(report) => DistanceRecord::from_report(variant, report),
        Err(e) => DistanceRecord::skipped(Some(variant), format!("{}: {e}", e.code())),
    }
}

fn distance_bound(
    study: &StudyConfig,
    d: &Draw,
    pen: &FitResult64,
    fits: &BTreeMap<Method, FitResult64>,
    variant: DistanceVariant,
) -> Result<BoundReport64> {
    let params = VcParams::from_counts(d.train.n(), d.train.p())?;
    let tail = distance_tail(study, d)?;
    let unpen = match (variant, fits.get(&Method::Ols), fits.get(&Method::Fsr)) {
        (DistanceVariant::Ols, Some(f), _) | (DistanceVariant::Fsr, _, Some(f)) => f.clone(),
        (DistanceVariant::Ols, None, _) => fit_ols(&d.train)?,
        (DistanceVariant::Fsr, _, None) => fit_fsr(&d.train, &fsr_config(study, &d.train)?)?,
    };
    let pair = HoldoutPair { unpen: &unpen, pen, train: &d.train, test: &d.test };
    let (full, _) = standardize(&d.raw)?;
    let eps = vc_epsilon(&params)?;
    if is_vacuous(eps) {
        // No curvature constant needed: the bound is +inf either way.
        let observed = (&unpen.coefficients - &pen.coefficients).norm();
        let slack = gebound::bounds::varsigma(&tail, d.test.n() as f64, params.n_t + d.test.n() as f64)?;
        let prob = study.confidence * (1.0 - 1.0 / params.n_t);
        return Ok(BoundReport64::vacuous(BoundKind::DistanceValidation, eps, slack, prob).with_observed(observed));
    }
    let mut eigen = EigenInfo::from_rho(min_eigenvalue(full.x()));
    if variant == DistanceVariant::Fsr {
        let s = study.restricted.sparsity.unwrap_or(study.dgp.beta_head.len()).clamp(1, d.train.p());
        let re = restricted_min_eigenvalue(full.x(), s, study.restricted.k0, ReMode::Exact)?;
        eigen = eigen.with_restricted(&re, s, study.restricted.k0);
    }
    l2_distance_bound(&pair, &params, &tail, &eigen, variant)
}

/// Runs replication `rep_index` of `study`. Method failures are recorded,
/// not returned; only data generation errors are fatal.
pub fn run_replication(study: &StudyConfig, rep_index: usize) -> Result<ReplicationRecord> {
    study.validate()?;
    let d = draw(study, rep_index)?;
    let grid = if study.methods.iter().any(|m| m.is_penalized()) {
        Some(lambda_path(&d.train, study.lambda_grid_size, study.lambda_spacing)?)
    } else {
        None
    };
    let mut fits = BTreeMap::new();
    let mut methods = Vec::with_capacity(study.methods.len());
    for &method in &study.methods {
        let fitted = fit_method(study, &d, method, grid.as_deref().unwrap_or(&[]))
            .and_then(|(fit, cv)| Ok((metrics(&d, &fit, cv)?, fit)));
        let outcome = match fitted {
            Ok((m, fit)) => {
                fits.insert(method, fit);
                MethodOutcome::Ok(m)
            }
            Err(e) => outcome_of_error(method, e),
        };
        methods.push(MethodRecord { method, outcome });
    }
    let distance = distance_record(study, &d, &fits, default_variant(d.train.n(), d.train.p()));
    Ok(ReplicationRecord {
        rep_index,
        seed: d.seed,
        n_train: d.train.n(),
        n_test: d.test.n(),
        methods,
        distance,
    })
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        f64::NAN
    } else {
        gebound::scalar::pairwise_sum(&v) / v.len() as f64
    }
}

/// Aggregates per-method means; records must already be in `rep_index` order.
pub fn summarize(methods: &[Method], records: &[ReplicationRecord]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let outcomes: Vec<&MethodOutcome> =
                records.iter().filter_map(|r| r.method(method)).map(|m| &m.outcome).collect();
            let ok: Vec<&MethodMetrics> = outcomes
                .iter()
                .filter_map(|o| match o {
                    MethodOutcome::Ok(m) => Some(m),
                    _ => None,
                })
                .collect();
            let col = |f: fn(&MethodMetrics) -> f64| mean_of(ok.iter().map(|m| f(m)));
            let cv: Vec<f64> = ok.iter().filter_map(|m| m.cv_ege).collect();
            MethodSummary {
                method,
                fitted: ok.len(),
                infeasible: outcomes.iter().filter(|o| matches!(o, MethodOutcome::Infeasible { .. })).count(),
                failed: outcomes.iter().filter(|o| matches!(o, MethodOutcome::Failed { .. })).count(),
                bias: col(|m| m.bias),
                bias_std: col(|m| m.bias_std),
                ete: col(|m| m.ete),
                ege: col(|m| m.ege),
                r2_train: col(|m| m.r2_train),
                r2_test: col(|m| m.r2_test),
                gr2: col(|m| m.gr2),
                cv_ege: (!cv.is_empty()).then(|| mean_of(cv.into_iter())),
            }
        })
        .collect()
}

pub fn tally(records: &[ReplicationRecord]) -> DominanceTally {
    let mut t = DominanceTally::default();
    for r in records {
        match &r.distance.report {
            Some(rep) => {
                t.computed += 1;
                t.vacuous += usize::from(rep.vacuous);
                t.dominated += usize::from(r.distance.dominated);
            }
            None => t.skipped += 1,
        }
    }
    t
}

/// Runs all replications (in parallel) and aggregates them in index order.
pub fn run_study(study: &StudyConfig) -> Result<StudyReport> {
    run_study_with_progress(study, |_| {})
}

/// [`run_study`] calling `progress` once per finished replication.
pub fn run_study_with_progress<F>(study: &StudyConfig, progress: F) -> Result<StudyReport>
where
    F: Fn(&ReplicationRecord) + Sync,
{
    study.validate()?;
    let mut records = (0..study.replications)
        .into_par_iter()
        .map(|r| {
            let rec = run_replication(study, r)?;
            progress(&rec);
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| r.rep_index);
    Ok(StudyReport {
        config: study.clone(),
        summaries: summarize(&study.methods, &records),
        dominance: tally(&records),
        replications: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(p: usize, methods: Vec<Method>) -> StudyConfig {
        let dgp = DgpConfig { n: 60, p, var_u: 1.0, corr: 0.5, beta_head: vec![2.0, 4.0], seed: 0 };
        StudyConfig { replications: 2, methods, lambda_grid_size: 20, master_seed: 11, ..StudyConfig::for_dgp(dgp) }
    }

    #[test]
    fn deterministic_replication() {
        let s = small(5, vec![Method::Lasso, Method::Ols]);
        assert_eq!(run_replication(&s, 1).unwrap(), run_replication(&s, 1).unwrap());
        let r = run_replication(&s, 0).unwrap();
        assert_eq!((r.n_train, r.n_test), (60, 15));
    }

    #[test]
    fn ols_infeasible_when_p_exceeds_n() {
        let s = small(80, vec![Method::Ols]);
        let r = run_replication(&s, 0).unwrap();
        assert!(matches!(r.methods[0].outcome, MethodOutcome::Infeasible { .. }));
    }

    #[test]
    fn single_replication_summary_equals_record() {
        let s = StudyConfig { replications: 1, ..small(5, vec![Method::Lasso]) };
        let rep = run_study(&s).unwrap();
        let m = rep.replications[0].methods[0].metrics().unwrap();
        let sm = rep.summary(Method::Lasso).unwrap();
        assert_eq!((sm.ege, sm.gr2, sm.bias), (m.ege, m.gr2, m.bias));
    }
}
