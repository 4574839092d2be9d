//! Numerical laboratory for Ghirlanda-Guerra identities in disordered Gibbs measures.

pub mod checks;
pub mod config;
pub mod error;
pub mod gaussian;
pub mod gibbs;
pub mod harness;
pub mod model;
pub mod observables;
pub mod report;
pub mod rng;
pub mod spin;
pub mod stats;

pub use checks::{run_experiment, CheckKind};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use report::ExperimentReport;
pub use model::{ModelInstance, ModelSpec, Params};
pub use spin::SpinConfiguration;
