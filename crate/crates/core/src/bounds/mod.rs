//! Closed-form generalization-error bounds: the VC slack, tail-dependent
//! concentration slack, validation and cross-validation eGE bounds, the
//! optimal fold count, curvature constants, and coefficient-distance bounds.

mod distance;
mod eigen;
mod ege;
mod report;
mod tail;
mod vc;

pub use distance::{
    l2_distance_bound, l2_distance_bound_cv, predicted_distance_bound, predicted_distance_bound_cv, DistanceVariant,
    HoldoutPair,
};
pub use eigen::{min_eigenvalue, restricted_min_eigenvalue, EigenInfo, ReMode, RestrictedEigen, EXACT_MAX_P, MULTI_STARTS};
pub use ege::{
    ege_bound_cv, ege_bound_validation, empirical_mean_loss, ols_ege_bound, optimal_k, KObjective, KSelection,
    KTracePoint, Mode,
};
pub use report::{BoundKind, BoundReport, BoundTerm};
pub use tail::{varsigma, varsigma_cv, TailRegime, TailSpec};
pub use vc::{is_vacuous, population_bound, vc_epsilon, VcParams};
