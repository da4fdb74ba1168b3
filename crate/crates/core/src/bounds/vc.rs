use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Inputs of the VC slack `epsilon`.
///
/// `n_t` is real-valued because the cross-validation training size
/// `n (K-1) / K` need not be an integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct VcParams<T: Scalar> {
    pub n_t: T,
    /// VC dimension; `p` for linear regression.
    pub h: T,
    pub eta: T,
}

impl<T: Scalar> VcParams<T> {
    pub fn new(n_t: T, h: T, eta: T) -> Result<Self> {
        let params = Self { n_t, h, eta };
        params.validate()?;
        Ok(params)
    }

    /// `eta = 1 / n_t`, the default used by every composed bound.
    pub fn with_default_eta(n_t: T, h: T) -> Result<Self> {
        if !(n_t > T::zero()) {
            return Err(Error::BadParams(format!("n_t={n_t} must be positive")));
        }
        Self::new(n_t, h, T::one() / n_t)
    }

    /// Training size and VC dimension given as counts.
    pub fn from_counts(n_t: usize, h: usize) -> Result<Self> {
        Self::with_default_eta(T::from_usize_lossy(n_t), T::from_usize_lossy(h))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h >= T::one()) || !self.h.is_finite() {
            return Err(Error::BadParams(format!("h={} must be >= 1", self.h)));
        }
        if !(self.n_t >= self.h) || !self.n_t.is_finite() {
            return Err(Error::BadParams(format!("n_t={} must be >= h={}", self.n_t, self.h)));
        }
        if !(self.eta > T::zero() && self.eta < T::one()) {
            return Err(Error::BadParams(format!("eta={} must lie in (0,1)", self.eta)));
        }
        Ok(())
    }
}

/// `epsilon = (1/n_t) [h ln(n_t/h) + h - ln(eta)]`.
pub fn vc_epsilon<T: Scalar>(params: &VcParams<T>) -> Result<T> {
    params.validate()?;
    let VcParams { n_t, h, eta } = *params;
    Ok((h * (n_t / h).ln() + h - eta.ln()) / n_t)
}

/// True when `sqrt(epsilon) >= 1`, i.e. the VC bound carries no information.
pub fn is_vacuous<T: Scalar>(epsilon: T) -> bool {
    !(epsilon.sqrt() < T::one())
}

/// Upper bound on the population error: `ete / (1 - sqrt(epsilon))`.
pub fn population_bound<T: Scalar>(ete: T, epsilon: T) -> Result<T> {
    if epsilon < T::zero() {
        return Err(Error::BadParams(format!("epsilon={epsilon} is negative")));
    }
    let root = epsilon.sqrt();
    if root >= T::one() || !root.is_finite() {
        return Err(Error::VacuousBound { sqrt_epsilon: root.as_f64() });
    }
    Ok(ete / (T::one() - root))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_value() {
        let e = vc_epsilon(&VcParams::new(100.0, 5.0, 0.05).unwrap()).unwrap();
        let expect = (5.0 * 20f64.ln() + 5.0 - 0.05f64.ln()) / 100.0;
        assert_eq!(e, expect);
        assert!((e - 0.22975).abs() < 1e-5);
    }

    #[test]
    fn h_equal_n_t_is_vacuous() {
        let e = vc_epsilon(&VcParams::new(50.0, 50.0, 0.3).unwrap()).unwrap();
        assert!(e > 1.0 && is_vacuous(e));
    }

    #[test]
    fn bad_params() {
        assert!(matches!(VcParams::new(5.0, 6.0, 0.1), Err(Error::BadParams(_))));
        assert!(matches!(VcParams::new(50.0, 6.0, 1.0), Err(Error::BadParams(_))));
        assert!(matches!(VcParams::new(50.0, 0.5, 0.1), Err(Error::BadParams(_))));
    }

    #[test]
    fn population_bound_cases() {
        assert_eq!(population_bound(3.0, 0.0).unwrap(), 3.0);
        assert_eq!(population_bound(1.0, 0.25).unwrap(), 2.0);
        assert_eq!(population_bound(1.0, 1.0).unwrap_err(), Error::VacuousBound { sqrt_epsilon: 1.0 });
    }
}
