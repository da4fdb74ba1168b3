use gebound::rng::rng_from_seed;
use gebound::{Dataset, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Linear model `y = X beta + u` with equicorrelated Gaussian covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpConfig {
    pub n: usize,
    pub p: usize,
    /// Noise variance. Zero gives a noiseless design.
    pub var_u: f64,
    /// Common pairwise correlation of the covariates, in [0, 1).
    pub corr: f64,
    /// Leading nonzero coefficients; the remaining `p - len` are zero.
    #[serde(default = "default_beta_head")]
    pub beta_head: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

pub fn default_beta_head() -> Vec<f64> {
    vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0]
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(Error::InvalidParameter(format!("need n >= 2 and p >= 1 (n={}, p={})", self.n, self.p)));
        }
        if !(0.0..1.0).contains(&self.corr) {
            return Err(Error::InvalidParameter(format!("corr={} must lie in [0,1)", self.corr)));
        }
        if !(self.var_u >= 0.0) || !self.var_u.is_finite() {
            return Err(Error::InvalidParameter(format!("var_u={} must be >= 0", self.var_u)));
        }
        if self.beta_head.len() > self.p {
            return Err(Error::InvalidParameter(format!(
                "{} leading coefficients exceed p={}",
                self.beta_head.len(),
                self.p
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> DVector<f64> {
        DVector::from_fn(self.p, |j, _| self.beta_head.get(j).copied().unwrap_or(0.0))
    }
}

/// Draws `(data, beta)`.
///
/// Each row uses one shared factor: `x_ij = sqrt(corr) z_i0 + sqrt(1-corr) z_ij`,
/// which has unit variances and pairwise correlation `corr` at O(np) cost.
pub fn generate_dgp(cfg: &DgpConfig) -> Result<(Dataset<f64>, DVector<f64>)> {
    cfg.validate()?;
    let (n, p) = (cfg.n, cfg.p);
    let mut rng = rng_from_seed(cfg.seed);
    let (a, b) = (cfg.corr.sqrt(), (1.0 - cfg.corr).sqrt());
    let sd_u = cfg.var_u.sqrt();
    let beta = cfg.beta();
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let z0: f64 = rng.sample(StandardNormal);
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            x[(i, j)] = a * z0 + b * z;
        }
        let u: f64 = rng.sample(StandardNormal);
        y[i] = x.row(i).transpose().dot(&beta) + sd_u * u;
    }
    Ok((Dataset::new(y, x)?, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_beta() {
        let cfg = DgpConfig { n: 10, p: 200, var_u: 1.0, corr: 0.9, beta_head: default_beta_head(), seed: 1 };
        let (d, beta) = generate_dgp(&cfg).unwrap();
        assert_eq!(beta.iter().filter(|&&b| b != 0.0).count(), 6);
        assert_eq!((d.n(), d.p()), (10, 200));
        assert_eq!(generate_dgp(&cfg).unwrap().0, d);
    }

    #[test]
    fn invalid_configs() {
        let ok = DgpConfig { n: 10, p: 3, var_u: 1.0, corr: 0.5, beta_head: vec![1.0], seed: 0 };
        assert!(ok.validate().is_ok());
        assert!(DgpConfig { corr: 1.0, ..ok.clone() }.validate().is_err());
        assert!(DgpConfig { var_u: -1.0, ..ok.clone() }.validate().is_err());
        assert!(DgpConfig { beta_head: vec![1.0; 4], ..ok }.validate().is_err());
    }
}
