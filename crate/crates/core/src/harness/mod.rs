//! Quenched averages and the free-energy identities used in the proof.

mod identities;
mod quenched;
mod scan;

pub use identities::{
    convexity_check, covariance_derivative_check, gamma_derivative_check, ConvexityRecord, CovariancePair,
    CovarianceRecord, DerivativeRecord, CONVEXITY_TOLERANCE, COVARIANCE_CONTRACT, DERIVATIVE_FLOOR,
};
pub use quenched::{
    concentration_check, jensen_consistency, proof_bound_check, quenched_free_energy, ConcentrationReport,
    ConcentrationRow, JensenRecord, ProofBoundRecord, QuenchedEstimate,
};
pub use scan::{averaged_identity_scan, uniform_grid, ScanPoint, ScanResult, MIN_SCAN_POINTS};

use crate::error::Result;
use crate::model::ModelInstance;

/// Builds disorder sample `s`.
pub trait SampleFactory: Fn(u64) -> Result<ModelInstance> + Sync {}

impl<F: Fn(u64) -> Result<ModelInstance> + Sync> SampleFactory for F {}

/// Default finite-difference step for `psi_N'(gamma)`.
pub const DERIVATIVE_STEP: f64 = 1e-4;
/// Default step for mixed second differences in the perturbation field.
pub const COVARIANCE_STEP: f64 = 1e-3;
