use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tail behaviour of the loss `Q`, selecting the concentration slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "regime", rename_all = "snake_case")]
pub enum TailRegime<T: Scalar> {
    /// `Q` in `(0, B]`.
    Bounded { b: T },
    /// Finite moments beyond the second; `variance` is `var[Q]`.
    Light { variance: T },
    /// Only a `nu`-th moment with `1 < nu <= 2`. `tau` bounds the ratio of
    /// the `nu`-norm of the loss to its mean; `mean_loss` is `E[Q]` (the
    /// population error under cross-validation).
    Heavy { nu: T, tau: T, mean_loss: T },
    /// Squared loss of OLS with Gaussian noise of variance `var_u`: the
    /// closed-form slack `2 var_u^2 / (n_s sqrt(1 - confidence))`
    /// (`n_s^2` under cross-validation).
    Gaussian { var_u: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TailSpec<T: Scalar> {
    #[serde(flatten)]
    pub regime: TailRegime<T>,
    /// The confidence level varpi in (0,1).
    pub confidence: T,
}

impl<T: Scalar> TailSpec<T> {
    pub fn new(regime: TailRegime<T>, confidence: T) -> Result<Self> {
        let spec = Self { regime, confidence };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.confidence;
        if !(c > T::zero() && c < T::one()) {
            return Err(Error::InvalidTail(format!("confidence {c} must lie in (0,1)")));
        }
        let finite_nonneg = |v: T| v >= T::zero() && v.is_finite();
        match self.regime {
            TailRegime::Bounded { b } if !(b > T::zero() && b.is_finite()) => {
                Err(Error::InvalidTail(format!("bound B={b} must be > 0")))
            }
            TailRegime::Light { variance } if !finite_nonneg(variance) => {
                Err(Error::InvalidTail(format!("variance {variance} must be >= 0")))
            }
            TailRegime::Heavy { nu, .. } if !(nu > T::one()) => Err(Error::HeavyTailUnusable { nu: nu.as_f64() }),
            TailRegime::Heavy { nu, .. } if nu > T::lit(2.0) => {
                Err(Error::InvalidTail(format!("nu={nu} > 2 belongs to the light-tail regime")))
            }
            TailRegime::Heavy { tau, mean_loss, .. } if !(tau >= T::one()) || !finite_nonneg(mean_loss) => {
                Err(Error::InvalidTail(format!("need tau >= 1 and mean_loss >= 0 (tau={tau}, mean_loss={mean_loss})")))
            }
            TailRegime::Gaussian { var_u } if !finite_nonneg(var_u) => {
                Err(Error::InvalidTail(format!("var_u={var_u} must be >= 0")))
            }
            _ => Ok(()),
        }
    }
}

fn check_sizes<T: Scalar>(n_s: T) -> Result<()> {
    if !(n_s >= T::one()) || !n_s.is_finite() {
        return Err(Error::BadParams(format!("n_s={n_s} must be >= 1")));
    }
    Ok(())
}

/// Validation slack `varsigma` for a test set of size `n_s`.
///
/// `n` is the full sample size `n_t + n_s`; it enters only the light-tail
/// regime, whose Chebyshev slack is stated over `n`.
pub fn varsigma<T: Scalar>(tail: &TailSpec<T>, n_s: T, n: T) -> Result<T> {
    tail.validate()?;
    check_sizes(n_s)?;
    let c = tail.confidence;
    let two = T::lit(2.0);
    Ok(match tail.regime {
        TailRegime::Heavy { nu, tau, mean_loss } => heavy(nu, tau, mean_loss, c, n_s),
        TailRegime::Bounded { b } => bounded(b, c, n_s),
        TailRegime::Light { variance } => {
            check_sizes(n)?;
            variance / (n * (T::one() - c))
        }
        TailRegime::Gaussian { var_u } => two * var_u * var_u / (n_s * (T::one() - c).sqrt()),
    })
}

/// Cross-validation slack `varsigma_cv` with test folds of size `n_s = n/K`.
pub fn varsigma_cv<T: Scalar>(tail: &TailSpec<T>, n_s: T) -> Result<T> {
    tail.validate()?;
    check_sizes(n_s)?;
    let c = tail.confidence;
    let two = T::lit(2.0);
    Ok(match tail.regime {
        TailRegime::Heavy { nu, tau, mean_loss } => heavy(nu, tau, mean_loss, c, n_s),
        TailRegime::Bounded { b } => bounded(b, c, n_s),
        TailRegime::Light { variance } => variance / (n_s * n_s * (T::one() - c)),
        TailRegime::Gaussian { var_u } => two * var_u * var_u / ((T::one() - c).sqrt() * n_s * n_s),
    })
}

/// `2^{1/nu} tau m / ((1-c)^{1/nu} n_s^{1-1/nu})`.
fn heavy<T: Scalar>(nu: T, tau: T, m: T, c: T, n_s: T) -> T {
    let inv = T::one() / nu;
    T::lit(2.0).powf(inv) * tau * m / ((T::one() - c).powf(inv) * n_s.powf(T::one() - inv))
}

/// `(B / n_s) ln sqrt(2 / (1-c))`.
fn bounded<T: Scalar>(b: T, c: T, n_s: T) -> T {
    b / n_s * (T::lit(2.0) / (T::one() - c)).sqrt().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_reference() {
        let t = TailSpec::new(TailRegime::Bounded { b: 1.0f64 }, 0.95).unwrap();
        let v = varsigma(&t, 100.0, 100.0).unwrap();
        assert!((v - 40f64.sqrt().ln() / 100.0).abs() < 1e-15);
        assert!((v - 0.018444).abs() < 1e-6);
    }

    #[test]
    fn heavy_reference() {
        let t = TailSpec::new(TailRegime::Heavy { nu: 2.0f64, tau: 1.0, mean_loss: 1.0 }, 0.5).unwrap();
        assert!((varsigma(&t, 100.0, 100.0).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn light_cv_reference() {
        let t = TailSpec::new(TailRegime::Light { variance: 1.0f64 }, 0.95).unwrap();
        assert!((varsigma_cv(&t, 50.0).unwrap() - 0.008).abs() < 1e-15);
    }

    #[test]
    fn nu_one_unusable() {
        let t = TailSpec { regime: TailRegime::Heavy { nu: 1.0, tau: 1.0, mean_loss: 1.0 }, confidence: 0.9 };
        assert_eq!(varsigma(&t, 10.0, 10.0).unwrap_err(), Error::HeavyTailUnusable { nu: 1.0 });
    }

    #[test]
    fn json_shape() {
        let t = TailSpec::new(TailRegime::Bounded { b: 2.0 }, 0.9).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"regime":"bounded","b":2.0,"confidence":0.9}"#);
        assert_eq!(serde_json::from_str::<TailSpec<f64>>(&s).unwrap(), t);
    }
}
