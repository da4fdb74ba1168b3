//! Datasets, standardization, holdout splits, fold plans and the
//! elementary L2 error functionals.

mod dataset;
mod folds;
pub mod io;
mod metrics;
mod standardize;

pub use dataset::Dataset;
pub use folds::{make_folds, split_holdout, split_holdout_n, FoldPlan, SplitSpec};
pub use metrics::{empirical_error, gr_squared, r_squared, residuals, total_sum_of_squares, EvalResult};
pub use standardize::{standardize, StandardizationStats};
