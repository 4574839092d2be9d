use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::quadrature::{reference_rule, tensor_expectations, tensor_rule};
use super::{hermite_variance, mc_variance, Counts, GaussianFunctional};
use crate::error::{Error, Result};
use crate::gibbs;
use crate::model::ModelInstance;
use crate::spin::SpinConfiguration;
use crate::stats::Estimate;

pub const PSI_MAX_N: usize = 4;
pub const PSI_MAX_FEATURES: usize = 4;

/// Gibbs probabilities and feature values of every configuration.
struct Table {
    p: Vec<f64>,
    f: Vec<Vec<f64>>,
}

fn table(instance: &ModelInstance) -> Table {
    let n = instance.n();
    let configs: Vec<SpinConfiguration> = (0..1u64 << n).map(|k| SpinConfiguration::from_bits(n, k)).collect();
    let lw: Vec<f64> = configs.iter().map(|c| instance.log_weight(c)).collect();
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = lw.iter().map(|w| (w - max).exp()).sum();
    Table {
        p: lw.iter().map(|w| (w - max).exp() / z).collect(),
        f: configs.iter().map(|c| instance.feature_values(c)).collect(),
    }
}

impl Table {
    fn moment(&self, c: &Counts) -> f64 {
        self.p
            .iter()
            .zip(&self.f)
            .map(|(p, f)| p * f.iter().zip(c).map(|(v, &k)| v.powi(k as i32)).product::<f64>())
            .sum()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * f64::from(n - j) / f64::from(j + 1))
}

/// Joint cumulant of the features with multiplicities `c`, by recursion on the
/// sub-multisets that contain one copy of the first index present.
fn cumulant(t: &Table, c: &Counts, memo: &mut HashMap<Counts, f64>, moments: &mut HashMap<Counts, f64>) -> f64 {
    if let Some(&v) = memo.get(c) {
        return v;
    }
    let moment = |c: &Counts, moments: &mut HashMap<Counts, f64>| *moments.entry(c.clone()).or_insert_with(|| t.moment(c));
    let first = c.iter().position(|&k| k > 0).expect("non-empty multiset");
    let mut value = moment(c, moments);
    let mut sub = vec![0u32; c.len()];
    sub[first] = 1;
    loop {
        if sub != *c {
            let mut weight = binomial(c[first] - 1, sub[first] - 1);
            for j in 0..c.len() {
                if j != first {
                    weight *= binomial(c[j], sub[j]);
                }
            }
            let rest: Counts = c.iter().zip(&sub).map(|(a, b)| a - b).collect();
            let k = cumulant(t, &sub, memo, moments);
            value -= weight * k * moment(&rest, moments);
        }
        // Odometer over sub <= c with sub[first] >= 1.
        let mut j = 0;
        loop {
            if j == c.len() {
                memo.insert(c.clone(), value);
                return value;
            }
            sub[j] += 1;
            if sub[j] <= c[j] {
                break;
            }
            sub[j] = if j == first { 1 } else { 0 };
            j += 1;
        }
    }
}

/// `psi_N` of a tiny instance as a functional of its perturbation gaussians, with
/// analytic derivatives `d^c psi = (gamma^k / N) kappa_c(f)` (joint Gibbs cumulants).
pub fn psi_functional(instance: &ModelInstance) -> Result<GaussianFunctional> {
    if instance.n() > PSI_MAX_N || instance.feature_count() > PSI_MAX_FEATURES || instance.feature_count() == 0 {
        return Err(Error::InvalidArgument(format!(
            "psi as a gaussian functional needs N <= {PSI_MAX_N} and 1..={PSI_MAX_FEATURES} features; got N = {}, |A| = {}",
            instance.n(),
            instance.feature_count()
        )));
    }
    let (value, derivs) = (instance.clone(), instance.clone());
    let n = instance.n() as f64;
    let gamma = instance.gamma();
    Ok(GaussianFunctional::new(instance.feature_count(), move |g| {
        let m = value.with_perturbation(g.to_vec()).expect("dimension matches");
        gibbs::log_partition(&m).expect("tiny instance") / n
    })
    .with_derivatives(move |g, sets| {
        let m = derivs.with_perturbation(g.to_vec()).expect("dimension matches");
        let t = table(&m);
        let (mut memo, mut moments) = (HashMap::new(), HashMap::new());
        sets.iter()
            .map(|c| {
                let k = c.iter().sum::<u32>() as i32;
                gamma.powi(k) / n * cumulant(&t, c, &mut memo, &mut moments)
            })
            .collect()
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiVarianceRecord {
    pub per_order: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub truncated_sum: f64,
    pub mc_variance: Estimate,
    /// `Var psi` by Gauss-Hermite quadrature: 64 nodes in one dimension, a 32-node tensor grid otherwise.
    pub quadrature_variance: f64,
    pub monotone: bool,
    /// `truncated_sum <= mc_variance + 3 sigma`.
    pub below_mc: bool,
}

/// Hermite truncation of `Var psi_N` over the perturbation gaussians against Monte Carlo and quadrature.
pub fn psi_variance_via_hermite(
    instance: &ModelInstance,
    k_max: usize,
    mc_samples: usize,
    stream_seed: u64,
) -> Result<PsiVarianceRecord> {
    let f = psi_functional(instance)?;
    let h = hermite_variance(&f, k_max)?;
    let mc = mc_variance(&f, mc_samples, stream_seed)?;
    let dim = f.dimension();
    let rule = if dim == 1 { reference_rule() } else { tensor_rule() };
    let m = tensor_expectations(rule, dim, 2, |g| {
        let v = f.eval(g);
        vec![v, v * v]
    });
    let quadrature_variance = (m[1] - m[0] * m[0]).max(0.0);
    let monotone = h.partial_sums.windows(2).all(|w| w[1] >= w[0]);
    Ok(PsiVarianceRecord {
        below_mc: h.truncated_sum <= mc.value + 3.0 * mc.std_error,
        per_order: h.per_order,
        partial_sums: h.partial_sums,
        truncated_sum: h.truncated_sum,
        mc_variance: mc,
        quadrature_variance,
        monotone,
    })
}
