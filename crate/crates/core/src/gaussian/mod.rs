//! The Hermite-expansion variance identity for smooth functionals of i.i.d. gaussians:
//! `Var f = sum_k (1/k!) sum_{i_1..i_k} (E d^k f / dg_{i_1}..dg_{i_k})^2`.
//!
//! Ordered index tuples are grouped by multiset. A multiset with multiplicities
//! `c` stands for `k! / prod c_j!` tuples, so order `k` contributes
//! `sum_c (E d^c f)^2 / prod c_j!`.

mod polynomial;
mod psi;
mod quadrature;
mod verify;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use polynomial::{gaussian_moment, Polynomial};
pub use psi::{psi_functional, psi_variance_via_hermite, PsiVarianceRecord, PSI_MAX_FEATURES, PSI_MAX_N};
pub use quadrature::{StandardNormalRule, NODES_PER_DIMENSION, REFERENCE_NODES};
pub use verify::{
    check_polynomial, polynomial_battery, variance_formula_suite, PolynomialCheck, VarianceFormulaRow,
    POLYNOMIAL_TAIL, POLYNOMIAL_TOLERANCE, PSI_RELATIVE_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::rng::{self, Lane};
use crate::stats::{variance_estimate, Estimate};

/// Highest derivative order.
pub const K_MAX: usize = 10;
/// Largest supported dimension.
pub const MAX_DIMENSION: usize = 6;

/// Multiplicity of each coordinate in a multi-index.
pub type Counts = Vec<u32>;

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type DerivativesFn = Arc<dyn Fn(&[f64], &[Counts]) -> Vec<f64> + Send + Sync>;
type ExpectationFn = Arc<dyn Fn(&Counts) -> f64 + Send + Sync>;

/// A smooth function of `dimension` i.i.d. standard gaussians.
#[derive(Clone)]
pub struct GaussianFunctional {
    dimension: usize,
    eval: EvalFn,
    /// Pointwise partial derivatives for a batch of multi-indices.
    derivatives: Option<DerivativesFn>,
    /// Closed-form `E[d^c f]`.
    expectations: Option<ExpectationFn>,
    degree: Option<usize>,
}

impl fmt::Debug for GaussianFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussianFunctional")
            .field("dimension", &self.dimension)
            .field("analytic_derivatives", &self.derivatives.is_some())
            .field("closed_form_expectations", &self.expectations.is_some())
            .field("degree", &self.degree)
            .finish()
    }
}

impl GaussianFunctional {
    pub fn new<F>(dimension: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { dimension, eval: Arc::new(eval), derivatives: None, expectations: None, degree: None }
    }

    pub fn with_derivatives<D>(mut self, derivatives: D) -> Self
    where
        D: Fn(&[f64], &[Counts]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.derivatives = Some(Arc::new(derivatives));
        self
    }

    pub fn with_expectations<E>(mut self, expectations: E) -> Self
    where
        E: Fn(&Counts) -> f64 + Send + Sync + 'static,
    {
        self.expectations = Some(Arc::new(expectations));
        self
    }

    /// Declares the functional a polynomial of this total degree.
    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = Some(degree);
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree
    }

    pub fn eval(&self, g: &[f64]) -> f64 {
        (self.eval)(g)
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.derivatives.is_some() || self.expectations.is_some()
    }

    fn check(&self, order: usize) -> Result<()> {
        if self.dimension == 0 || self.dimension > MAX_DIMENSION {
            return Err(Error::InvalidArgument(format!(
                "dimension {} outside 1..={MAX_DIMENSION}",
                self.dimension
            )));
        }
        if order > K_MAX {
            return Err(Error::InvalidArgument(format!("derivative order {order} exceeds K_max = {K_MAX}")));
        }
        Ok(())
    }
}

/// Multiplicities of a multi-index of coordinates.
pub fn counts_of(dimension: usize, multi_index: &[usize]) -> Result<Counts> {
    let mut c = vec![0u32; dimension];
    for &i in multi_index {
        if i >= dimension {
            return Err(Error::InvalidArgument(format!("index {i} out of range for dimension {dimension}")));
        }
        c[i] += 1;
    }
    Ok(c)
}

/// All multiplicity vectors of total order `k` in `dimension` coordinates, lexicographic.
pub fn multisets(dimension: usize, k: usize) -> Vec<Counts> {
    fn fill(out: &mut Vec<Counts>, current: &mut Counts, pos: usize, left: u32) {
        if pos + 1 == current.len() {
            current[pos] = left;
            out.push(current.clone());
            return;
        }
        for c in (0..=left).rev() {
            current[pos] = c;
            fill(out, current, pos + 1, left - c);
        }
    }
    let mut out = Vec::new();
    if dimension > 0 {
        fill(&mut out, &mut vec![0; dimension], 0, k as u32);
    }
    out
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Central difference spacing for order `k`.
fn stencil_spacing(order: u32) -> f64 {
    0.5 / f64::from(order.max(1))
}

/// Mixed central difference `prod_j delta_j^{c_j} f / s^k` at `x`.
fn finite_difference(f: &GaussianFunctional, x: &[f64], counts: &Counts) -> f64 {
    let order: u32 = counts.iter().sum();
    let s = stencil_spacing(order);
    let axes: Vec<(usize, u32)> = counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(j, &c)| (j, c)).collect();
    let mut point = x.to_vec();
    let mut total = 0.0;
    let mut offsets = vec![0u32; axes.len()];
    loop {
        let mut coef = 1.0;
        for (&(j, m), &i) in axes.iter().zip(&offsets) {
            let binom = factorial(m) / (factorial(i) * factorial(m - i));
            coef *= if i % 2 == 0 { binom } else { -binom };
            point[j] = x[j] + (0.5 * f64::from(m) - f64::from(i)) * s;
        }
        total += coef * f.eval(&point);
        // Odometer over the stencil offsets.
        let mut axis = 0;
        loop {
            if axis == axes.len() {
                return total / s.powi(order as i32);
            }
            offsets[axis] += 1;
            if offsets[axis] <= axes[axis].1 {
                break;
            }
            offsets[axis] = 0;
            axis += 1;
        }
    }
}

/// `E[d^c f]` for each multiplicity vector in `sets`.
///
/// Uses the closed form when the functional has one; otherwise tensor
/// Gauss-Hermite quadrature (32 nodes per dimension) of the analytic
/// derivatives, or of central differences with spacing `0.5 / k`.
pub fn derivative_expectations(f: &GaussianFunctional, sets: &[Counts]) -> Result<Vec<f64>> {
    let order = sets.iter().map(|c| c.iter().sum::<u32>() as usize).max().unwrap_or(0);
    f.check(order)?;
    if let Some(e) = &f.expectations {
        return Ok(sets.iter().map(|c| e(c)).collect());
    }
    let rule = quadrature::tensor_rule();
    Ok(match &f.derivatives {
        Some(d) => quadrature::tensor_expectations(rule, f.dimension, sets.len(), |x| d(x, sets)),
        None => quadrature::tensor_expectations(rule, f.dimension, sets.len(), |x| {
            sets.iter().map(|c| finite_difference(f, x, c)).collect()
        }),
    })
}

/// `E[d^k f / dg_{i_1} .. dg_{i_k}]` for one multi-index.
pub fn derivative_expectation(f: &GaussianFunctional, multi_index: &[usize]) -> Result<f64> {
    f.check(multi_index.len())?;
    let c = counts_of(f.dimension, multi_index)?;
    Ok(derivative_expectations(f, &[c])?[0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteVariance {
    /// Order-`k` terms for `k = 1..=K`; all non-negative.
    pub per_order: Vec<f64>,
    /// Partial sums over orders `1..=k`.
    pub partial_sums: Vec<f64>,
    pub truncated_sum: f64,
}

/// Truncation of the Hermite variance series at order `k_max`.
pub fn hermite_variance(f: &GaussianFunctional, k_max: usize) -> Result<HermiteVariance> {
    f.check(k_max)?;
    let sets: Vec<Counts> = (1..=k_max).flat_map(|k| multisets(f.dimension, k)).collect();
    let expectations = derivative_expectations(f, &sets)?;
    let mut per_order = vec![0.0; k_max];
    for (c, e) in sets.iter().zip(&expectations) {
        let k = c.iter().sum::<u32>() as usize;
        let weight: f64 = c.iter().map(|&m| factorial(m)).product();
        per_order[k - 1] += e * e / weight;
    }
    let mut running = 0.0;
    let partial_sums: Vec<f64> = per_order
        .iter()
        .map(|t| {
            running += t;
            running
        })
        .collect();
    Ok(HermiteVariance { truncated_sum: running, per_order, partial_sums })
}

/// Plain Monte Carlo variance of `f` over i.i.d. standard normal inputs.
pub fn mc_variance(f: &GaussianFunctional, samples: usize, stream_seed: u64) -> Result<Estimate> {
    if samples < 2 {
        return Err(Error::InsufficientSamples(format!("need at least 2 samples, got {samples}")));
    }
    let mut rng = rng::stream(stream_seed, 0, Lane::Gaussian);
    let mut point = vec![0.0; f.dimension];
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            for x in point.iter_mut() {
                *x = rng::standard_normal(&mut rng);
            }
            f.eval(&point)
        })
        .collect();
    Ok(variance_estimate(&values))
}
