//! Plot-ready CSV/JSON outputs plus a manifest of content hashes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gebound::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Method, StudyConfig};
use crate::coverage::CoverageReport;
use crate::study::{MethodRecord, StudyReport};

/// Zero coefficients shown in the boxplot data, worst first.
pub const WORST_ZERO_COEFFICIENTS: usize = 4;
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: StudyConfig,
    /// Per-replication seeds, in replication order.
    pub seeds: Vec<u64>,
    pub files: Vec<ManifestEntry>,
}

struct Writer {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(bytes);
        self.entries.push(ManifestEntry {
            file: name.to_string(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn finish(mut self, config: &StudyConfig, seeds: Vec<u64>) -> Result<Manifest> {
        let manifest = Manifest { config: config.clone(), seeds, files: std::mem::take(&mut self.entries) };
        let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        let path = self.dir.join("manifest.json");
        fs::write(&path, json).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(manifest)
    }
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn table_csv(report: &StudyReport) -> Result<Vec<u8>> {
    let rows = report
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.method.to_string(),
                s.fitted.to_string(),
                s.infeasible.to_string(),
                s.failed.to_string(),
                num(s.bias),
                num(s.bias_std),
                num(s.ete),
                num(s.ege),
                num(s.r2_train),
                num(s.r2_test),
                num(s.gr2),
                s.cv_ege.map(num).unwrap_or_default(),
            ]
        })
        .collect();
    csv_bytes(
        &["method", "fitted", "infeasible", "failed", "bias", "bias_std", "ete", "ege", "r2_train", "r2_test", "gr2", "cv_ege"],
        rows,
    )
}

/// Indices plotted for one method: every nonzero true coefficient, then the
/// zero coefficients with the largest mean absolute estimate.
fn boxplot_indices(report: &StudyReport, method: Method) -> Vec<usize> {
    let beta = report.config.dgp.beta();
    let estimates: Vec<&Vec<f64>> = report
        .replications
        .iter()
        .filter_map(|r| r.method(method).and_then(MethodRecord::metrics))
        .map(|m| &m.coefficients)
        .collect();
    let mut idx: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    if estimates.is_empty() {
        return idx;
    }
    let mut zeros: Vec<(usize, f64)> = (0..beta.len())
        .filter(|&j| beta[j] == 0.0)
        .map(|j| (j, estimates.iter().map(|b| b[j].abs()).sum::<f64>() / estimates.len() as f64))
        .collect();
    zeros.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    idx.extend(zeros.iter().take(WORST_ZERO_COEFFICIENTS).map(|z| z.0));
    idx
}

fn boxplot_csv(report: &StudyReport) -> Result<Vec<u8>> {
    let beta = report.config.dgp.beta();
    let mut rows = Vec::new();
    for &method in &report.config.methods {
        let idx = boxplot_indices(report, method);
        for r in &report.replications {
            if let Some(m) = r.method(method).and_then(MethodRecord::metrics) {
                for &j in &idx {
                    rows.push(vec![
                        method.to_string(),
                        r.rep_index.to_string(),
                        format!("b{}", j + 1),
                        num(beta[j]),
                        num(m.coefficients[j]),
                    ]);
                }
            }
        }
    }
    csv_bytes(&["method", "rep_index", "coefficient", "true_value", "estimate"], rows)
}

fn histogram_csv(report: &StudyReport) -> Result<Vec<u8>> {
    let mut by_method: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for r in &report.replications {
        for m in &r.methods {
            if let Some(x) = m.metrics().map(|x| x.gr2).filter(|g| g.is_finite()) {
                by_method.entry(m.method).or_default().push(x);
            }
        }
    }
    let all: Vec<f64> = by_method.values().flatten().copied().collect();
    let mut rows = Vec::new();
    if !all.is_empty() {
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / HISTOGRAM_BINS as f64 } else { 1.0 };
        for (method, vals) in &by_method {
            let mut counts = [0usize; HISTOGRAM_BINS];
            for v in vals {
                let b = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
                counts[b] += 1;
            }
            for (b, c) in counts.iter().enumerate() {
                let lower = lo + b as f64 * width;
                rows.push(vec![method.to_string(), b.to_string(), num(lower), num(lower + width), c.to_string()]);
            }
        }
    }
    csv_bytes(&["method", "bin", "lower", "upper", "count"], rows)
}

/// Writes `table.csv`, `boxplot_data.csv`, `gr2_histogram.csv`,
/// `report.json` and `manifest.json` (config, seeds and a SHA-256 per
/// file) into `out_dir`.
pub fn emit_artifacts(report: &StudyReport, out_dir: &Path) -> Result<Manifest> {
    if report.replications.is_empty() {
        return Err(Error::InvalidParameter("study report has no replications".into()));
    }
    let mut w = Writer::new(out_dir)?;
    w.put("table.csv", &table_csv(report)?)?;
    w.put("boxplot_data.csv", &boxplot_csv(report)?)?;
    w.put("gr2_histogram.csv", &histogram_csv(report)?)?;
    w.put("report.json", &serde_json::to_vec_pretty(report).map_err(|e| Error::Io(e.to_string()))?)?;
    w.finish(&report.config, report.replications.iter().map(|r| r.seed).collect())
}

/// Writes `coverage.json`, `coverage_trace.csv` and `manifest.json`.
pub fn emit_coverage_artifacts(report: &CoverageReport, out_dir: &Path) -> Result<Manifest> {
    let mut w = Writer::new(out_dir)?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let rows = report
        .trials
        .iter()
        .map(|t| {
            vec![
                t.rep_index.to_string(),
                t.seed.to_string(),
                opt(t.observed),
                opt(t.bound),
                opt(t.epsilon),
                t.vacuous.to_string(),
                t.covered.to_string(),
                t.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let trace = csv_bytes(&["rep_index", "seed", "observed", "bound", "epsilon", "vacuous", "covered", "note"], rows)?;
    w.put("coverage.json", &serde_json::to_vec_pretty(report).map_err(|e| Error::Io(e.to_string()))?)?;
    w.put("coverage_trace.csv", &trace)?;
    w.finish(&report.config, report.trials.iter().map(|t| t.seed).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::DgpConfig;
    use crate::study::run_study;

    #[test]
    fn manifest_hashes_are_stable() {
        let dgp = DgpConfig { n: 40, p: 12, var_u: 1.0, corr: 0.5, beta_head: vec![3.0, 1.0], seed: 0 };
        let cfg = StudyConfig { replications: 2, lambda_grid_size: 10, ..StudyConfig::for_dgp(dgp) };
        let report = run_study(&cfg).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = emit_artifacts(&report, a.path()).unwrap();
        let mb = emit_artifacts(&report, b.path()).unwrap();
        assert_eq!(ma, mb);
        let names: Vec<&str> = ma.files.iter().map(|f| f.file.as_str()).collect();
        assert_eq!(names, ["table.csv", "boxplot_data.csv", "gr2_histogram.csv", "report.json"]);
        let table = fs::read_to_string(a.path().join("table.csv")).unwrap();
        assert!(table.lines().nth(1).unwrap().starts_with("lasso,2,"));
        // 2 nonzero + 4 worst zero coefficients, 2 replications, 3 methods.
        let box_rows = fs::read_to_string(a.path().join("boxplot_data.csv")).unwrap().lines().count() - 1;
        assert_eq!(box_rows, 6 * 2 * 3);
    }
}
