use serde::{Deserialize, Serialize};

use super::SampleFactory;
use crate::error::{Error, Result};
use crate::observables::{gg_residual, OverlapFunctional, ResidualEstimate};
use crate::stats::{trapezoid_weights, Estimate};

pub const MIN_SCAN_POINTS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub gamma: f64,
    pub residual: ResidualEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    /// Trapezoid estimate of the integral of `|delta_N|` over the grid.
    pub integral: Estimate,
}

/// Uniform grid of `points` values on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect()
}

/// Integrates `|delta_N(gamma)|` over `[lo, hi]` with the trapezoid rule.
///
/// `factory(gamma, s)` must build disorder sample `s` at `gamma`; every grid
/// point reuses the same disorder and replica streams. Per-point errors are
/// combined as independent, `sqrt(sum w_i^2 se_i^2)`.
#[allow(clippy::too_many_arguments)]
pub fn averaged_identity_scan<G, F>(
    factory_at: G,
    functional: &OverlapFunctional,
    interval: (f64, f64),
    grid_points: usize,
    disorder_samples: usize,
    replica_draws: usize,
    master_seed: u64,
) -> Result<ScanResult>
where
    G: Fn(f64) -> F,
    F: SampleFactory,
{
    if grid_points < MIN_SCAN_POINTS {
        return Err(Error::InvalidArgument(format!(
            "scan needs at least {MIN_SCAN_POINTS} grid points, got {grid_points}"
        )));
    }
    let (lo, hi) = interval;
    if hi <= lo {
        return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
    }
    let grid = uniform_grid(lo, hi, grid_points);
    let weights = trapezoid_weights(&grid);
    let mut points = Vec::with_capacity(grid.len());
    let (mut value, mut var) = (0.0, 0.0);
    for (&gamma, w) in grid.iter().zip(&weights) {
        let residual = gg_residual(factory_at(gamma), functional, disorder_samples, replica_draws, master_seed)?;
        value += w * residual.delta_hat.abs();
        var += (w * residual.std_error).powi(2);
        points.push(ScanPoint { gamma, residual });
    }
    Ok(ScanResult { points, integral: Estimate::new(value, var.sqrt()) })
}
