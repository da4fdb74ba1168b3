use thiserror::Error;

/// Errors raised by the data, estimator, bound and evaluation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("column {index} is constant (zero variance)")]
    ConstantColumn { index: usize },

    #[error("degenerate split: n_t={n_train}, n_s={n_test}")]
    DegenerateSplit { n_train: usize, n_test: usize },

    #[error("fold count K={k} is outside [2, n={n}]")]
    BadK { k: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("TSS is zero; R^2 undefined")]
    ZeroTss,

    #[error("underdetermined system: n={n} < p={p}")]
    Underdetermined { n: usize, p: usize },

    #[error("normal equations are numerically singular (condition estimate {condition:e})")]
    NearSingular { condition: f64 },

    #[error("no convergence after {max_sweeps} sweeps")]
    NoConvergence { max_sweeps: usize },

    #[error("unsupported penalty: {0}")]
    UnsupportedPenalty(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fit failed at lambda={lambda}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("fit failed in fold {fold}: {source}")]
    InFold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("bad VC parameters: {0}")]
    BadParams(String),

    #[error("vacuous bound: sqrt(epsilon)={sqrt_epsilon} >= 1")]
    VacuousBound { sqrt_epsilon: f64 },

    #[error("heavy-tail regime unusable for nu={nu} (need 1 < nu <= 2)")]
    HeavyTailUnusable { nu: f64 },

    #[error("invalid tail specification: {0}")]
    InvalidTail(String),

    #[error("no candidate K gives a non-vacuous bound")]
    AllVacuous,

    #[error("restricted eigenvalue exact mode supports p <= {max_p}, got p={p}")]
    TooLargeForExact { p: usize, max_p: usize },

    #[error("{which} is zero; the distance bound is inapplicable")]
    ZeroEigenvalue { which: &'static str },

    #[error("fit provenance does not match the split: {0}")]
    SplitMismatch(String),

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("parse failure: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable code, used by the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidDataset(_) => "INVALID_DATASET",
            Error::ConstantColumn { .. } => "CONSTANT_COLUMN",
            Error::DegenerateSplit { .. } => "DEGENERATE_SPLIT",
            Error::BadK { .. } => "BAD_K",
            Error::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            Error::ZeroTss => "ZERO_TSS",
            Error::Underdetermined { .. } => "UNDERDETERMINED",
            Error::NearSingular { .. } => "NEAR_SINGULAR",
            Error::NoConvergence { .. } => "NO_CONVERGENCE",
            Error::UnsupportedPenalty(_) => "UNSUPPORTED_PENALTY",
            Error::InvalidParameter(_) => "INVALID_PARAMETER",
            Error::AtLambda { source, .. } | Error::InFold { source, .. } => source.code(),
            Error::BadParams(_) => "BAD_PARAMS",
            Error::VacuousBound { .. } => "VACUOUS_BOUND",
            Error::HeavyTailUnusable { .. } => "HEAVY_TAIL_UNUSABLE",
            Error::InvalidTail(_) => "INVALID_TAIL",
            Error::AllVacuous => "ALL_VACUOUS",
            Error::TooLargeForExact { .. } => "TOO_LARGE_FOR_EXACT",
            Error::ZeroEigenvalue { .. } => "ZERO_EIGENVALUE",
            Error::SplitMismatch(_) => "SPLIT_MISMATCH",
            Error::Io(_) => "IO_FAILURE",
            Error::Parse(_) => "PARSE_FAILURE",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
