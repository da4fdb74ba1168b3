//! Simulation harness: the equicorrelated Gaussian design, replicated
//! lasso-vs-baseline studies, bound-coverage experiments and plot-ready
//! artifacts.

pub mod artifacts;
pub mod config;
pub mod coverage;
pub mod dgp;
pub mod study;

pub use artifacts::{emit_artifacts, emit_coverage_artifacts, Manifest, ManifestEntry};
pub use config::{Method, StudyConfig};
pub use coverage::{coverage_experiment, CoverageKind, CoverageReport, CoverageTrial};
pub use dgp::{generate_dgp, DgpConfig};
pub use study::{run_replication, run_study, ReplicationRecord, StudyReport};
