use std::path::{Path, PathBuf};

use gebound::bounds::{ege_bound_cv, ege_bound_validation, optimal_k, KObjective, KTracePoint};
use gebound::data::io::load;
use gebound::data::{make_folds, split_holdout, standardize};
use gebound::estimators::{fit_ols, fit_path, lambda_path, select_by_cv, select_by_validation, PathReport, Scaling, Spacing};
use gebound::evaluation::{evaluate_cv, evaluate_holdout};
use gebound::rng::derive_seed;
use gebound::{BoundReport64, Dataset64, EvalResult64, PenaltyKind, TailSpec64, VcParams};
use gebound_sim::coverage::CoverageKind;
use gebound_sim::study::run_study_with_progress;
use gebound_sim::{coverage_experiment, emit_artifacts, emit_coverage_artifacts, StudyConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::layered::Layered;

/// What a command prints on success.
pub enum Output {
    Json(Value),
    Text(String),
}

fn json<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Output(e.to_string()))
}

fn write_json(out: Option<&Path>, name: &str, v: &Value) -> CliResult<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Output(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn load_dataset(layered: &Layered, raw: &str) -> CliResult<Dataset64> {
    let path = layered.resolve("data", raw);
    if !path.exists() {
        return Err(CliError::DatasetNotFound(path.display().to_string()));
    }
    Ok(load(&path)?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitConfig {
    /// Resolved against the config directory before typing.
    #[allow(dead_code)]
    data: String,
    #[serde(default = "default_penalty")]
    penalty: String,
    #[serde(default = "default_grid_size")]
    lambda_grid_size: usize,
    #[serde(default)]
    lambda_spacing: Spacing,
    /// Explicit grid (strictly decreasing); replaces the generated path.
    #[serde(default)]
    lambdas: Option<Vec<f64>>,
    #[serde(default = "default_holdout")]
    holdout_fraction: f64,
    /// Tune by K-fold cross-validation instead of a single holdout.
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    seed: u64,
}

fn default_penalty() -> String {
    "l1".into()
}
fn default_grid_size() -> usize {
    100
}
fn default_holdout() -> f64 {
    0.2
}

#[derive(Serialize)]
struct FitOutput {
    mode: &'static str,
    penalty: PenaltyKind,
    n: usize,
    p: usize,
    path: PathReport<f64>,
    /// Holdout metrics (validation) or fold means (CV) at the selected lambda.
    eval: EvalResult64,
    /// The selected model in original units.
    intercept: f64,
    coefficients_raw: Vec<f64>,
}

fn grid_for(kind: PenaltyKind, cfg: &FitConfig, train_std: &Dataset64) -> CliResult<Vec<f64>> {
    Ok(match (kind, &cfg.lambdas) {
        (PenaltyKind::None, _) => vec![0.0],
        (_, Some(g)) => g.clone(),
        _ => lambda_path(train_std, cfg.lambda_grid_size, cfg.lambda_spacing)?,
    })
}

pub fn fit(mut layered: Layered, seed: Option<u64>, out: Option<&Path>, report: bool) -> CliResult<Output> {
    if let Some(s) = seed {
        layered.value.insert("seed".into(), s.into());
    }
    let data_key = layered.value.get("data").and_then(Value::as_str).map(str::to_string);
    let data = match &data_key {
        Some(raw) => load_dataset(&layered, raw)?,
        None => return Err(CliError::Config("missing field `data`".into())),
    };
    let cfg: FitConfig = layered.into_typed()?;
    let kind: PenaltyKind = cfg.penalty.parse()?;

    let (output, markdown) = match cfg.k {
        None => {
            let split = split_holdout(&data, cfg.holdout_fraction, derive_seed(cfg.seed, 1))?;
            let (train_std, _) = standardize(&split.train(&data)?)?;
            let grid = grid_for(kind, &cfg, &train_std)?;
            let path = select_by_validation(&data, kind, &grid, &split, Scaling::PerPartition)?;
            let run = evaluate_holdout(path.selected_fit(), &data, &split, Scaling::PerPartition)?;
            let stats = path.train_stats.as_ref().expect("per-partition scaling records stats");
            let (intercept, raw) = stats.coefficients_to_original(&path.selected_fit().coefficients)?;
            let out = FitOutput {
                mode: "validation",
                penalty: kind,
                n: data.n(),
                p: data.p(),
                path: path.report(),
                eval: run.eval,
                intercept,
                coefficients_raw: raw.as_slice().to_vec(),
            };
            (out, run.to_markdown())
        }
        Some(k) => {
            let folds = make_folds(data.n(), k, derive_seed(cfg.seed, 2))?;
            let (full_std, _) = standardize(&data)?;
            let grid = grid_for(kind, &cfg, &full_std)?;
            let cv = select_by_cv(&data, kind, &grid, &folds, Scaling::PerPartition)?;
            let lambda = cv.selected_lambda();
            let run = evaluate_cv(
                |t: &Dataset64| {
                    fit_path(t, kind, &[lambda])?
                        .pop()
                        .ok_or_else(|| gebound::Error::InvalidParameter("empty path".into()))
                },
                &data,
                &folds,
                Scaling::PerPartition,
            )?;
            let stats = cv.refit_stats.as_ref().expect("per-partition scaling records stats");
            let (intercept, raw) = stats.coefficients_to_original(&cv.refit.coefficients)?;
            let mean = |f: fn(&EvalResult64) -> f64| run.rounds.iter().map(|r| f(&r.eval)).sum::<f64>() / k as f64;
            let eval = EvalResult64::new(run.mean_ete, run.mean_ege, mean(|e| e.r2_train), mean(|e| e.r2_test));
            let path = PathReport {
                grid: cv.grid.clone(),
                etes: cv.fold_fits.iter().map(|f| f.ete).collect(),
                eges: cv.eges.clone(),
                selected: cv.selected,
                lambda,
                coefficients: cv.refit.coefficients.as_slice().to_vec(),
            };
            let out = FitOutput {
                mode: "cv",
                penalty: kind,
                n: data.n(),
                p: data.p(),
                path,
                eval,
                intercept,
                coefficients_raw: raw.as_slice().to_vec(),
            };
            (out, run.to_markdown())
        }
    };
    let value = json(&output)?;
    write_json(out, "fit.json", &value)?;
    Ok(if report { Output::Text(markdown) } else { Output::Json(value) })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsRequest {
    ete: f64,
    /// Training size (per-round training size under CV).
    n_t: f64,
    /// Test size (fold size under CV).
    n_s: f64,
    h: f64,
    /// Confidence parameter of the VC bound; defaults to `1/n_t`.
    #[serde(default)]
    eta: Option<f64>,
    /// Number of folds; selects the cross-validated bound.
    #[serde(default)]
    k: Option<usize>,
    tail: TailSpec64,
}

pub fn bounds(layered: Layered, out: Option<&Path>) -> CliResult<Output> {
    let req: BoundsRequest = layered.into_typed()?;
    let params = match req.eta {
        Some(eta) => VcParams::new(req.n_t, req.h, eta)?,
        None => VcParams::with_default_eta(req.n_t, req.h)?,
    };
    let report: BoundReport64 = match req.k {
        Some(k) => ege_bound_cv(req.ete, &params, &req.tail, req.n_s, k)?,
        None => ege_bound_validation(req.ete, &params, &req.tail, req.n_s)?,
    };
    let value = json(&report)?;
    write_json(out, "bounds.json", &value)?;
    Ok(Output::Json(value))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TuneKConfig {
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    var_u: Option<f64>,
    #[serde(default)]
    h: Option<usize>,
    #[serde(default = "default_confidence")]
    confidence: f64,
    #[serde(default)]
    candidates: Option<Vec<usize>>,
    #[serde(default)]
    objective: KObjective,
    /// Dataset used to fill in `n`, `h` and an OLS estimate of `var_u`.
    #[allow(dead_code)]
    #[serde(default)]
    data: Option<String>,
}

fn default_confidence() -> f64 {
    0.95
}

#[derive(Serialize)]
struct TuneKOutput {
    k_star: usize,
    objective: f64,
    n: usize,
    h: usize,
    var_u: f64,
    trace: Vec<KTracePoint<f64>>,
    /// Candidates skipped because their VC slack is vacuous or undefined.
    skipped_vacuous: Vec<usize>,
}

/// Unbiased OLS residual variance `RSS / (n - p - 1)` in raw units.
fn estimate_var_u(data: &Dataset64) -> CliResult<f64> {
    let (std, stats) = standardize(data)?;
    let dof = data.n() as f64 - data.p() as f64 - 1.0;
    if dof <= 0.0 {
        return Err(CliError::Config("var_u cannot be estimated: n <= p + 1".into()));
    }
    let fit = fit_ols(&std)?;
    Ok(fit.ete * data.n() as f64 / dof * stats.y_scale().powi(2))
}

pub fn tune_k(layered: Layered, out: Option<&Path>) -> CliResult<Output> {
    let data = match layered.value.get("data").and_then(Value::as_str) {
        Some(raw) => Some(load_dataset(&layered, raw)?),
        None => None,
    };
    let cfg: TuneKConfig = layered.into_typed()?;
    let missing = |f: &str| CliError::Config(format!("missing field `{f}` (or supply `data`)"));
    let n = cfg.n.or(data.as_ref().map(|d| d.n())).ok_or_else(|| missing("n"))?;
    let h = cfg.h.or(data.as_ref().map(|d| d.p())).ok_or_else(|| missing("h"))?;
    let var_u = match (cfg.var_u, &data) {
        (Some(v), _) => v,
        (None, Some(d)) => estimate_var_u(d)?,
        (None, None) => return Err(missing("var_u")),
    };
    let candidates = cfg.candidates.unwrap_or_else(|| (2..=n.min(25)).collect());
    let sel = optimal_k(n, var_u, h, cfg.confidence, &candidates, cfg.objective)?;
    let value = json(&TuneKOutput {
        k_star: sel.k_star,
        objective: sel.objective,
        n,
        h,
        var_u,
        trace: sel.trace,
        skipped_vacuous: sel.vacuous,
    })?;
    write_json(out, "tune_k.json", &value)?;
    Ok(Output::Json(value))
}

fn study_config(mut layered: Layered, seed: Option<u64>) -> CliResult<StudyConfig> {
    if let Some(s) = seed {
        layered.value.insert("master_seed".into(), s.into());
    }
    let cfg: StudyConfig = layered.into_typed()?;
    cfg.validate()?;
    Ok(cfg)
}

pub const DEFAULT_OUT: &str = "gebound-out";

pub fn simulate(layered: Layered, seed: Option<u64>, out: Option<&Path>) -> CliResult<Output> {
    let cfg = study_config(layered, seed)?;
    let report = run_study_with_progress(&cfg, |r| {
        let parts: Vec<String> = r
            .methods
            .iter()
            .map(|m| match m.metrics() {
                Some(x) => format!("{} eGE={:.4} GR2={:.4}", m.method, x.ege, x.gr2),
                None => format!("{} n/a", m.method),
            })
            .collect();
        eprintln!("replication {} (seed {}): {}", r.rep_index, r.seed, parts.join(", "));
    })?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let manifest = emit_artifacts(&report, &dir)?;
    Ok(Output::Json(serde_json::json!({
        "out_dir": dir.display().to_string(),
        "summaries": json(&report.summaries)?,
        "dominance": json(&report.dominance)?,
        "files": json(&manifest.files)?,
    })))
}

pub fn coverage(mut layered: Layered, seed: Option<u64>, out: Option<&Path>, kind: Option<&str>) -> CliResult<Output> {
    let from_file = layered.take("kind");
    let kind: CoverageKind = match (kind, from_file.as_ref().and_then(Value::as_str)) {
        (Some(k), _) | (None, Some(k)) => k.parse()?,
        (None, None) => return Err(CliError::Config("missing bound kind (`kind` key or --kind)".into())),
    };
    let cfg = study_config(layered, seed)?;
    let report = coverage_experiment(&cfg, kind)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let manifest = emit_coverage_artifacts(&report, &dir)?;
    Ok(Output::Json(serde_json::json!({
        "kind": kind,
        "trials": report.trials.len(),
        "covered": report.covered,
        "vacuous": report.vacuous,
        "failed": report.failed,
        "fraction": report.fraction,
        "nominal_probability": report.nominal_probability,
        "out_dir": dir.display().to_string(),
        "files": json(&manifest.files)?,
    })))
}
