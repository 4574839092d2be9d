use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_self_overlap, overlap_matrix, OverlapArray, OverlapFunctional};
use crate::error::{Error, Result};
use crate::gibbs::GibbsEnsemble;
use crate::model::ModelInstance;
use crate::rng::{self, Lane};
use crate::stats::{mean, mean_estimate};

/// Fewest disorder samples for which a residual standard error is reported.
pub const MIN_DISORDER_SAMPLES: usize = 8;

/// The three quenched terms of the residual, plus the two factors of the product term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualComponents {
    /// `nu(R_{1,n+1} f)`.
    pub joint: f64,
    /// `nu(R_{1,2}) nu(f)`, from disorder half-samples paired crosswise.
    pub product: f64,
    /// `sum_{l=2..n} nu(R_{1,l} f)`.
    pub pairs: f64,
    /// `nu(R_{1,2})`.
    pub overlap_mean: f64,
    /// `nu(f)`.
    pub functional_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualEstimate {
    pub delta_hat: f64,
    pub std_error: f64,
    pub arity: usize,
    pub disorder_samples: usize,
    /// Replica tuples per disorder sample.
    pub replica_draws: usize,
    pub components: ResidualComponents,
}

impl ResidualEstimate {
    /// `joint - product / n - pairs / n`.
    pub fn recombine(components: &ResidualComponents, arity: usize) -> f64 {
        let n = arity as f64;
        components.joint - components.product / n - components.pairs / n
    }
}

/// Inner Gibbs averages for one disorder sample.
struct SampleTerms {
    joint: f64,
    overlap: f64,
    functional: f64,
    pairs: f64,
}

fn sample_terms(instance: ModelInstance, functional: &OverlapFunctional, draws: usize, seed: u64) -> Result<SampleTerms> {
    check_self_overlap(&instance)?;
    let n = functional.arity();
    let ensemble = GibbsEnsemble::new(instance);
    let mut sampler = ensemble.replica_sampler(n + 1, seed)?;
    let (mut joint, mut overlap, mut value, mut pairs) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..draws {
        let tuple = sampler.draw_tuple(n + 1);
        let m = overlap_matrix(ensemble.instance(), &tuple);
        let f = functional.eval(&OverlapArray::from_matrix(n, &m));
        joint += m[0][n] * f;
        overlap += m[0][1];
        value += f;
        pairs += (1..n).map(|l| m[0][l]).sum::<f64>() * f;
    }
    let d = draws as f64;
    Ok(SampleTerms { joint: joint / d, overlap: overlap / d, functional: value / d, pairs: pairs / d })
}

/// Estimates the Ghirlanda-Guerra residual
/// `delta_N = nu(R_{1,n+1} f) - (1/n) nu(R_{1,2}) nu(f) - (1/n) sum_{l=2..n} nu(R_{1,l} f)`.
///
/// `factory(s)` builds disorder sample `s`; each sample contributes
/// `replica_draws` tuples of `n + 1` replicas. The product `nu(R_{1,2}) nu(f)` pairs
/// the first half of the disorder samples with the second half (both ways) so
/// the two factors never share a sample. The standard error linearizes the
/// estimator around the sample means and treats disorder samples as i.i.d.
pub fn gg_residual<F>(
    factory: F,
    functional: &OverlapFunctional,
    disorder_samples: usize,
    replica_draws: usize,
    master_seed: u64,
) -> Result<ResidualEstimate>
where
    F: Fn(u64) -> Result<ModelInstance> + Sync,
{
    if disorder_samples < MIN_DISORDER_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "residual needs at least {MIN_DISORDER_SAMPLES} disorder samples, got {disorder_samples}"
        )));
    }
    if replica_draws == 0 {
        return Err(Error::InsufficientSamples("replica_draws must be positive".into()));
    }
    let n = functional.arity();
    let terms: Vec<SampleTerms> = (0..disorder_samples as u64)
        .into_par_iter()
        .map(|s| {
            let seed = rng::derive_seed(master_seed, s, Lane::Replica);
            sample_terms(factory(s)?, functional, replica_draws, seed)
        })
        .collect::<Result<_>>()?;

    let joint: Vec<f64> = terms.iter().map(|t| t.joint).collect();
    let overlap: Vec<f64> = terms.iter().map(|t| t.overlap).collect();
    let value: Vec<f64> = terms.iter().map(|t| t.functional).collect();
    let pairs: Vec<f64> = terms.iter().map(|t| t.pairs).collect();

    let half = disorder_samples / 2;
    let (b1, b2) = (mean(&overlap[..half]), mean(&overlap[half..]));
    let (c1, c2) = (mean(&value[..half]), mean(&value[half..]));
    let components = ResidualComponents {
        joint: mean(&joint),
        product: 0.5 * (b1 * c2 + b2 * c1),
        pairs: mean(&pairs),
        overlap_mean: mean(&overlap),
        functional_mean: mean(&value),
    };
    let delta_hat = ResidualEstimate::recombine(&components, n);

    let (b, c) = (components.overlap_mean, components.functional_mean);
    let nf = n as f64;
    let linearized: Vec<f64> = terms
        .iter()
        .map(|t| t.joint - (c * t.overlap + b * t.functional - b * c) / nf - t.pairs / nf)
        .collect();
    let std_error = mean_estimate(&linearized).std_error;

    Ok(ResidualEstimate { delta_hat, std_error, arity: n, disorder_samples, replica_draws, components })
}
