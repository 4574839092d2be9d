//! Replica overlaps and the estimators built on them.

mod extended;
mod functional;
mod histogram;
mod residual;
mod selfavg;

use serde::{Deserialize, Serialize};

pub use extended::{extended_gg_diagnostic, ExtendedGgCell, ExtendedGgTable};
pub use functional::{OverlapArray, OverlapFn, OverlapFunctional, FUNCTIONAL_NAMES};
pub use histogram::{overlap_histogram, OverlapHistogram, DEFAULT_BINS};
pub use residual::{gg_residual, ResidualComponents, ResidualEstimate, MIN_DISORDER_SAMPLES};
pub use selfavg::{self_averaging_report, SelfAveragingReport};

use crate::error::{Error, Result};
use crate::gibbs::GibbsEnsemble;
use crate::model::ModelInstance;
use crate::spin::SpinConfiguration;
use crate::stats::{batch_mean_estimate, Estimate};

/// Batch count for standard errors of replica averages.
pub const EXPECTATION_BATCHES: usize = 32;

/// Generalized overlap `(1/N) sum_alpha f_alpha(a) f_alpha(b)`.
pub fn overlap(instance: &ModelInstance, a: &SpinConfiguration, b: &SpinConfiguration) -> f64 {
    dot(&instance.feature_values(a), &instance.feature_values(b)) / instance.n() as f64
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full symmetric overlap matrix of `replicas`; the diagonal holds `R_{l,l}`.
pub fn overlap_matrix(instance: &ModelInstance, replicas: &[SpinConfiguration]) -> Vec<Vec<f64>> {
    let features: Vec<Vec<f64>> = replicas.iter().map(|c| instance.feature_values(c)).collect();
    let inv_n = 1.0 / instance.n() as f64;
    let k = replicas.len();
    let mut m = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let r = dot(&features[a], &features[b]) * inv_n;
            m[a][b] = r;
            m[b][a] = r;
        }
    }
    m
}

/// `H = (1/N) sum_alpha g_alpha f_alpha(sigma)`; independent of `gamma`.
pub fn h_statistic(instance: &ModelInstance, config: &SpinConfiguration) -> f64 {
    h_from_features(instance.perturbation(), &instance.feature_values(config), instance.n())
}

#[inline]
pub(crate) fn h_from_features(g: &[f64], features: &[f64], n: usize) -> f64 {
    dot(g, features) / n as f64
}

/// Monte Carlo `<f(R_n)>` over i.i.d. replica tuples with batch-means error.
pub fn gibbs_expectation(
    ensemble: &GibbsEnsemble,
    functional: &OverlapFunctional,
    draws: usize,
    stream_seed: u64,
) -> Result<Estimate> {
    let identity: Vec<usize> = (0..functional.arity()).collect();
    gibbs_expectation_permuted(ensemble, functional, draws, stream_seed, &identity)
}

/// As [`gibbs_expectation`], with replica `l` of each tuple relabelled as `permutation[l]`.
pub fn gibbs_expectation_permuted(
    ensemble: &GibbsEnsemble,
    functional: &OverlapFunctional,
    draws: usize,
    stream_seed: u64,
    permutation: &[usize],
) -> Result<Estimate> {
    let n = functional.arity();
    if draws < 2 {
        return Err(Error::InsufficientSamples(format!("need at least 2 replica tuples, got {draws}")));
    }
    let mut seen = vec![false; n];
    if permutation.len() != n || permutation.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidArgument(format!("{permutation:?} is not a permutation of 0..{n}")));
    }
    let instance = ensemble.instance();
    let mut sampler = ensemble.replica_sampler(n, stream_seed)?;
    let mut values = Vec::with_capacity(draws);
    for _ in 0..draws {
        let tuple = sampler.draw_tuple(n);
        let ordered: Vec<SpinConfiguration> = permutation.iter().map(|&p| tuple[p].clone()).collect();
        let r = OverlapArray::from_matrix(n, &overlap_matrix(instance, &ordered));
        values.push(functional.eval(&r));
    }
    Ok(batch_mean_estimate(&values, EXPECTATION_BATCHES))
}

/// How inner Gibbs averages were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerAverage {
    Exact,
    Sampled,
}

/// `|R| <= R_{1,1}` up to rounding.
pub(crate) fn check_self_overlap(instance: &ModelInstance) -> Result<f64> {
    instance.self_overlap_constant(crate::model::SELF_OVERLAP_TOLERANCE)
}

/// Histogram bin of `value` on `bins` uniform bins over `[-r11, r11]`.
#[inline]
pub(crate) fn bin_index(value: f64, r11: f64, bins: usize) -> usize {
    let x = (value + r11) / (2.0 * r11) * bins as f64;
    if x <= 0.0 {
        0
    } else {
        (x as usize).min(bins - 1)
    }
}
