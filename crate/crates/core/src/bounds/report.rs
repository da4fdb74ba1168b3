use serde::{Deserialize, Serialize};

use super::vc::{is_vacuous, population_bound};
use crate::error::Result;
use crate::scalar::Scalar;

/// Which inequality a [`BoundReport`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// eGE of a validated model.
    EgeValidation,
    /// Fold-averaged eGE under K-fold cross-validation.
    EgeCv,
    /// OLS eGE under Gaussian noise, validation.
    OlsValidation,
    /// OLS fold-averaged eGE under Gaussian noise.
    OlsCv,
    /// `(1/n_s) ||X_s (b_unpen - b_pen)||^2`, validation.
    PredictedGapValidation,
    /// Fold average of the fitted-value gap.
    PredictedGapCv,
    /// `||b_unpen - b_pen||_2`, validation.
    DistanceValidation,
    /// Fold average of `||b_unpen^q - b_pen^q||_2^2` (a squared distance).
    DistanceCv,
}

/// One named summand of a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoundTerm<T: Scalar> {
    pub name: String,
    pub value: T,
}

/// The evaluated right-hand side of a bound with its ingredients.
///
/// A vacuous report (`sqrt(epsilon) >= 1`) carries `bound = +inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoundReport<T: Scalar> {
    pub kind: BoundKind,
    pub epsilon: T,
    pub varsigma: T,
    pub bound: T,
    /// Probability with which the bound holds.
    pub probability: T,
    pub vacuous: bool,
    pub terms: Vec<BoundTerm<T>>,
    /// The bounded quantity, when the inputs determine it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<T>,
}

impl<T: Scalar> BoundReport<T> {
    /// `ete / (1 - sqrt(epsilon)) + varsigma`, itemized. Vacuous when
    /// `sqrt(epsilon) >= 1`.
    pub fn compose(kind: BoundKind, ete: T, epsilon: T, varsigma: T, probability: T) -> Result<Self> {
        if is_vacuous(epsilon) {
            return Ok(Self::vacuous(kind, epsilon, varsigma, probability));
        }
        let pop = population_bound(ete, epsilon)?;
        Ok(Self {
            kind,
            epsilon,
            varsigma,
            bound: pop + varsigma,
            probability,
            vacuous: false,
            terms: vec![term("population", pop), term("varsigma", varsigma)],
            observed: None,
        })
    }

    /// A flagged report whose bound is `+inf`.
    pub fn vacuous(kind: BoundKind, epsilon: T, varsigma: T, probability: T) -> Self {
        Self {
            kind,
            epsilon,
            varsigma,
            bound: T::infinity(),
            probability,
            vacuous: true,
            terms: vec![term("varsigma", varsigma)],
            observed: None,
        }
    }

    pub fn term(&self, name: &str) -> Option<T> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    /// True when the observed value is known and within the bound.
    pub fn holds(&self) -> Option<bool> {
        self.observed.map(|o| o <= self.bound)
    }

    pub fn with_observed(mut self, observed: T) -> Self {
        self.observed = Some(observed);
        self
    }
}

pub(crate) fn term<T: Scalar>(name: &str, value: T) -> BoundTerm<T> {
    BoundTerm { name: name.to_string(), value }
}
