use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{self, GibbsEnsemble};
use crate::model::ModelInstance;
use crate::rng::{self, Lane};

/// Floor of the derivative contract, set by the log-partition accuracy.
pub const DERIVATIVE_FLOOR: f64 = 1e-6;
/// Step used to estimate the third derivative for the truncation bound.
const THIRD_DERIVATIVE_STEP: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRecord {
    /// `<H>`.
    pub lhs: f64,
    /// `(psi(gamma + step) - psi(gamma - step)) / (2 step)`.
    pub rhs: f64,
    pub abs_error: f64,
    /// Estimated `|psi'''(gamma)|`.
    pub m: f64,
    /// `max(1e-6, step^2 M)`.
    pub contract: f64,
    pub pass: bool,
}

/// Checks `<H> = psi_N'(gamma)` on one disorder realization.
pub fn gamma_derivative_check(instance: &ModelInstance, step: f64) -> Result<DerivativeRecord> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let g = instance.gamma();
    let psi = |x: f64| gibbs::free_energy_per_site(&instance.with_gamma(x));
    let lhs = GibbsEnsemble::new(instance.clone()).moments()?.h_mean;
    let rhs = (psi(g + step)? - psi(g - step)?) / (2.0 * step);
    let t = THIRD_DERIVATIVE_STEP;
    let third = (psi(g + 2.0 * t)? - 2.0 * psi(g + t)? + 2.0 * psi(g - t)? - psi(g - 2.0 * t)?) / (2.0 * t * t * t);
    let m = third.abs();
    let contract = DERIVATIVE_FLOOR.max(step * step * m);
    let abs_error = (lhs - rhs).abs();
    Ok(DerivativeRecord { lhs, rhs, abs_error, m, contract, pass: abs_error <= contract })
}

pub const CONVEXITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityRecord {
    pub holds: bool,
    /// Most negative second difference (positive values mean none were negative).
    pub worst_second_difference: f64,
    /// Largest `<H>(gamma) - chord slope` over grid pairs.
    pub worst_chord_violation: f64,
    pub grid_points: usize,
}

/// Convexity of `gamma -> psi_N(gamma)` on a sorted grid, for one disorder realization.
///
/// On a non-uniform grid the second difference is the difference of
/// neighbouring chord slopes.
pub fn convexity_check(instance: &ModelInstance, grid: &[f64]) -> Result<ConvexityRecord> {
    if grid.len() < 3 {
        return Err(Error::InvalidArgument(format!("grid too small: {} points, need at least 3", grid.len())));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    let mut psi = Vec::with_capacity(grid.len());
    let mut h = Vec::with_capacity(grid.len());
    for &x in grid {
        let ens = GibbsEnsemble::new(instance.with_gamma(x));
        let m = ens.moments()?;
        psi.push(m.log_partition / instance.n() as f64);
        h.push(m.h_mean);
    }
    let slope = |i: usize, j: usize| (psi[j] - psi[i]) / (grid[j] - grid[i]);
    let worst_second_difference = (1..grid.len() - 1)
        .map(|i| slope(i, i + 1) - slope(i - 1, i))
        .fold(f64::INFINITY, f64::min);
    let mut worst_chord_violation = f64::NEG_INFINITY;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            worst_chord_violation = worst_chord_violation.max(h[i] - slope(i, j));
        }
    }
    Ok(ConvexityRecord {
        holds: worst_second_difference >= -CONVEXITY_TOLERANCE && worst_chord_violation <= CONVEXITY_TOLERANCE,
        worst_second_difference,
        worst_chord_violation,
        grid_points: grid.len(),
    })
}

pub const COVARIANCE_CONTRACT: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariancePair {
    pub alpha: usize,
    pub beta: usize,
    /// `(1/N)(<f_a f_b> - <f_a><f_b>)`.
    pub covariance: f64,
    /// `(1/gamma^2) d^2 psi / dg_a dg_b` by central differences.
    pub finite_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRecord {
    pub pairs: Vec<CovariancePair>,
    pub max_discrepancy: f64,
    pub pass: bool,
}

/// Compares exact feature covariances with mixed second differences of `psi_N` in the
/// perturbation field, on `pairs` feature pairs chosen by `selection_seed`.
///
/// The first pair is always diagonal; the rest are distinct pairs drawn without
/// replacement from `alpha < beta` (or all of them when fewer exist).
pub fn covariance_derivative_check(
    instance: &ModelInstance,
    pairs: usize,
    step: f64,
    selection_seed: u64,
) -> Result<CovarianceRecord> {
    let gamma = instance.gamma();
    if gamma == 0.0 {
        return Err(Error::InvalidArgument("covariance identity requires gamma != 0".into()));
    }
    if step <= 0.0 {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let count = instance.feature_count();
    if count == 0 || pairs == 0 {
        return Ok(CovarianceRecord { pairs: Vec::new(), max_discrepancy: 0.0, pass: true });
    }
    let mut rng = rng::stream(selection_seed, 0, Lane::Selection);
    let mut chosen = vec![(rng::below(&mut rng, count), usize::MAX)];
    chosen[0].1 = chosen[0].0;
    let off: Vec<(usize, usize)> = (0..count).flat_map(|a| (a + 1..count).map(move |b| (a, b))).collect();
    let take = (pairs - 1).min(off.len());
    let mut picks: Vec<usize> = sample(&mut rng, off.len(), take).into_vec();
    picks.sort_unstable();
    chosen.extend(picks.into_iter().map(|k| off[k]));

    let ens = GibbsEnsemble::new(instance.clone());
    let cov = ens.feature_covariance()?;
    let n = instance.n() as f64;
    let g = instance.perturbation();
    let psi = |shifts: &[(usize, f64)]| -> Result<f64> {
        let mut field = g.to_vec();
        for &(a, d) in shifts {
            field[a] += d;
        }
        gibbs::free_energy_per_site(&instance.with_perturbation(field)?)
    };

    let mut out = Vec::with_capacity(chosen.len());
    let mut max_discrepancy: f64 = 0.0;
    for (a, b) in chosen {
        let second = if a == b {
            (psi(&[(a, step)])? - 2.0 * psi(&[])? + psi(&[(a, -step)])?) / (step * step)
        } else {
            (psi(&[(a, step), (b, step)])? - psi(&[(a, step), (b, -step)])? - psi(&[(a, -step), (b, step)])?
                + psi(&[(a, -step), (b, -step)])?)
                / (4.0 * step * step)
        };
        let finite_difference = second / (gamma * gamma);
        let covariance = cov[a][b] / n;
        max_discrepancy = max_discrepancy.max((covariance - finite_difference).abs());
        out.push(CovariancePair { alpha: a, beta: b, covariance, finite_difference });
    }
    Ok(CovarianceRecord { pairs: out, max_discrepancy, pass: max_discrepancy <= COVARIANCE_CONTRACT })
}
