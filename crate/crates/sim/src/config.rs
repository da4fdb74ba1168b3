//! Study configuration, read from TOML.
//!
//! ```toml
//! master_seed = 7
//! replications = 20
//! holdout_fraction = 0.2
//! methods = ["lasso", "ols"]
//! lambda_grid_size = 100
//! lambda_spacing = "log"
//! confidence = 0.95
//! # k = 5                  # also report K-fold CV eGE
//!
//! [dgp]
//! n = 250                  # training-sample size n_t
//! p = 200
//! var_u = 1.0
//! corr = 0.9
//! beta_head = [2, 4, 6, 8, 10, 12]
//!
//! [restricted]             # restricted-eigenvalue settings (p > n only)
//! sparsity = 6
//! k0 = 1.0
//!
//! [fsr]                    # forward-stagewise settings
//! step_scale = 0.01        # step = step_scale * max|x_j'y|/n
//! max_iters = 50000
//! stop_tolerance = 1e-3
//! ```
//!
//! Layering: defaults < file < `key=value` overrides (dotted keys reach
//! into tables, e.g. `dgp.p=500`). Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use gebound::estimators::Spacing;
use gebound::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::dgp::DgpConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lasso,
    Ridge,
    Ols,
    Fsr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lasso => "lasso",
            Method::Ridge => "ridge",
            Method::Ols => "ols",
            Method::Fsr => "fsr",
        }
    }

    pub fn is_penalized(self) -> bool {
        matches!(self, Method::Lasso | Method::Ridge)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lasso" => Ok(Method::Lasso),
            "ridge" => Ok(Method::Ridge),
            "ols" => Ok(Method::Ols),
            "fsr" => Ok(Method::Fsr),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RestrictedSettings {
    /// Support size `s`; defaults to the number of nonzero leading coefficients.
    pub sparsity: Option<usize>,
    pub k0: f64,
}

impl Default for RestrictedSettings {
    fn default() -> Self {
        Self { sparsity: None, k0: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FsrSettings {
    /// Step as a fraction of the largest initial correlation `max|x_j'y|/n`.
    pub step_scale: f64,
    pub max_iters: usize,
    pub stop_tolerance: f64,
}

impl Default for FsrSettings {
    fn default() -> Self {
        Self { step_scale: 0.01, max_iters: 50_000, stop_tolerance: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub dgp: DgpConfig,
    #[serde(default = "defaults::replications")]
    pub replications: usize,
    /// Test share of each replication's sample.
    #[serde(default = "defaults::holdout_fraction")]
    pub holdout_fraction: f64,
    #[serde(default = "defaults::methods")]
    pub methods: Vec<Method>,
    #[serde(default = "defaults::lambda_grid_size")]
    pub lambda_grid_size: usize,
    #[serde(default)]
    pub lambda_spacing: Spacing,
    /// Folds for the optional cross-validated eGE.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "defaults::confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub restricted: RestrictedSettings,
    #[serde(default)]
    pub fsr: FsrSettings,
}

mod defaults {
    use super::*;

    pub fn replications() -> usize {
        20
    }
    pub fn holdout_fraction() -> f64 {
        0.2
    }
    pub fn methods() -> Vec<Method> {
        vec![Method::Lasso, Method::Ols, Method::Fsr]
    }
    pub fn lambda_grid_size() -> usize {
        100
    }
    pub fn confidence() -> f64 {
        0.95
    }
}

impl StudyConfig {
    /// Default study settings around a DGP.
    pub fn for_dgp(dgp: DgpConfig) -> Self {
        Self {
            dgp,
            replications: defaults::replications(),
            holdout_fraction: defaults::holdout_fraction(),
            methods: defaults::methods(),
            lambda_grid_size: defaults::lambda_grid_size(),
            lambda_spacing: Spacing::Log,
            k: None,
            master_seed: 0,
            confidence: defaults::confidence(),
            restricted: RestrictedSettings::default(),
            fsr: FsrSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.replications < 1 {
            return bad("replications must be >= 1".into());
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad(format!("holdout_fraction={} must lie in (0,1)", self.holdout_fraction));
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.lambda_grid_size < 1 {
            return bad("lambda_grid_size must be >= 1".into());
        }
        if matches!(self.k, Some(k) if k < 2) {
            return bad("k must be >= 2".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad(format!("confidence={} must lie in (0,1)", self.confidence));
        }
        if !(self.restricted.k0 > 0.0) {
            return bad("restricted.k0 must be > 0".into());
        }
        if !(self.fsr.step_scale > 0.0) || self.fsr.max_iters < 1 || !(self.fsr.stop_tolerance >= 0.0) {
            return bad("fsr settings need step_scale > 0, max_iters >= 1, stop_tolerance >= 0".into());
        }
        Ok(())
    }

    /// Total rows drawn per replication: `round(n / (1 - f))`, so the
    /// training partition has `dgp.n` rows.
    pub fn sample_size(&self) -> usize {
        (self.dgp.n as f64 / (1.0 - self.holdout_fraction)).round() as usize
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("study config serializes")
    }
}

/// Applies one `dotted.key=value` override to a TOML table. The value is
/// parsed as a TOML literal, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override {assignment:?} is not key=value")))?;
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("bad override key {key:?}")));
    }
    let (last, path) = parts.split_last().expect("nonempty");
    let mut cur = table;
    for part in path {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("override {key:?}: {part:?} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "master_seed = 3\n[dgp]\nn = 50\np = 8\nvar_u = 1.0\ncorr = 0.5\n";

    #[test]
    fn defaults_fill_in() {
        let c = StudyConfig::from_toml_str(BASE, &[]).unwrap();
        assert_eq!(c.replications, 20);
        assert_eq!(c.holdout_fraction, 0.2);
        assert_eq!(c.dgp.beta_head, vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0]);
        assert_eq!(c.sample_size(), 63);
    }

    #[test]
    fn overrides_win() {
        let o = ["dgp.p=9".to_string(), "methods=[\"lasso\"]".into(), "k=5".into(), "fsr.max_iters=10".into()];
        let c = StudyConfig::from_toml_str(BASE, &o).unwrap();
        assert_eq!((c.dgp.p, c.k, c.fsr.max_iters), (9, Some(5), 10));
        assert_eq!(c.methods, vec![Method::Lasso]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(StudyConfig::from_toml_str(BASE, &["bogus=1".into()]).is_err());
        assert!(StudyConfig::from_toml_str(BASE, &["dgp.bogus=1".into()]).is_err());
        assert!(StudyConfig::from_toml_str(BASE, &["holdout_fraction=1.5".into()]).is_err());
    }

    #[test]
    fn round_trips() {
        let c = StudyConfig::from_toml_str(BASE, &["k=4".into()]).unwrap();
        assert_eq!(StudyConfig::from_toml_str(&c.to_toml_string(), &[]).unwrap(), c);
    }
}
