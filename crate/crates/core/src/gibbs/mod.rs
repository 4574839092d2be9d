//! Exact finite-N Gibbs computations and replica samplers.
//!
//! Exact mode enumerates all `2^N` configurations in Gray-code order. The
//! partition function is a streaming log-sum-exp (first pass); moments use
//! normalized weights `exp(log_weight - log Z)` (second pass). Neither pass
//! stores the weights. The exact sampler is the only consumer that keeps a
//! `2^N` table.

mod enumerate;
mod reference;
mod sampler;

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use reference::{reference_moments, ReferenceMoments};
pub use sampler::{CdfTable, ExactSampler, McmcSampler, McmcSettings, ReplicaSampler};

use enumerate::{LogSumExp, Walker};

use crate::error::{Error, Result};
use crate::model::ModelInstance;
use crate::stats::CompensatedSum;

/// Largest `N` handled by exact enumeration.
pub const N_MAX_EXACT: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    Exact,
    Mcmc,
}

impl EngineMode {
    pub fn name(self) -> &'static str {
        match self {
            EngineMode::Exact => "exact",
            EngineMode::Mcmc => "mcmc",
        }
    }
}

/// Exact first and second moments under `G_N`.
#[derive(Clone, Debug)]
pub struct ExactMoments {
    pub log_partition: f64,
    /// `<f_alpha>` in feature order.
    pub feature_means: Vec<f64>,
    /// `<H>` with `H = (1/N) sum_alpha g_alpha f_alpha`.
    pub h_mean: f64,
    /// `<H^2>`.
    pub h_second: f64,
    /// Sum of the normalized weights; equals one up to rounding.
    pub total_probability: f64,
}

impl ExactMoments {
    pub fn h_variance(&self) -> f64 {
        (self.h_second - self.h_mean * self.h_mean).max(0.0)
    }

    /// `<R_{1,2}> = (1/N) sum_alpha <f_alpha>^2`.
    pub fn pair_overlap(&self, n: usize) -> f64 {
        self.feature_means.iter().map(|m| m * m).sum::<f64>() / n as f64
    }
}

fn check_exact(n: usize) -> Result<()> {
    if n > N_MAX_EXACT {
        Err(Error::TooLargeForExact { n, limit: N_MAX_EXACT })
    } else {
        Ok(())
    }
}

fn compute_log_partition(instance: &ModelInstance) -> f64 {
    let walker = Walker::new(instance);
    let parts = walker.par_chunks(LogSumExp::default, |acc, _, _, lw, _| acc.push(lw));
    LogSumExp::combine(&parts)
}

struct MomentAcc {
    total: CompensatedSum,
    features: Vec<CompensatedSum>,
    h: CompensatedSum,
    h2: CompensatedSum,
}

fn compute_moments(instance: &ModelInstance, log_partition: f64) -> ExactMoments {
    let walker = Walker::new(instance);
    let count = instance.feature_count();
    let g = instance.perturbation().to_vec();
    let inv_n = 1.0 / instance.n() as f64;
    let parts = walker.par_chunks(
        || MomentAcc {
            total: CompensatedSum::new(),
            features: vec![CompensatedSum::new(); count],
            h: CompensatedSum::new(),
            h2: CompensatedSum::new(),
        },
        |acc, _, _, lw, f| {
            let p = (lw - log_partition).exp();
            acc.total.add(p);
            let mut h = 0.0;
            for (a, v) in f.iter().enumerate() {
                acc.features[a].add(p * v);
                h += g[a] * v;
            }
            h *= inv_n;
            acc.h.add(p * h);
            acc.h2.add(p * h * h);
        },
    );
    let mut total = CompensatedSum::new();
    let mut features = vec![CompensatedSum::new(); count];
    let mut h = CompensatedSum::new();
    let mut h2 = CompensatedSum::new();
    for part in &parts {
        total.merge(&part.total);
        for (dst, src) in features.iter_mut().zip(&part.features) {
            dst.merge(src);
        }
        h.merge(&part.h);
        h2.merge(&part.h2);
    }
    ExactMoments {
        log_partition,
        feature_means: features.iter().map(CompensatedSum::value).collect(),
        h_mean: h.value(),
        h_second: h2.value(),
        total_probability: total.value(),
    }
}

/// A model instance with lazily computed exact quantities.
///
/// Immutable after construction apart from write-once caches, so it can be
/// shared across threads. Each sampler it hands out has a single owner.
#[derive(Debug)]
pub struct GibbsEnsemble {
    instance: ModelInstance,
    mode: EngineMode,
    mcmc: McmcSettings,
    log_partition: OnceLock<f64>,
    moments: OnceLock<ExactMoments>,
    table: OnceLock<Arc<CdfTable>>,
}

impl GibbsEnsemble {
    /// Exact mode when `N <= N_MAX_EXACT`, MCMC otherwise.
    pub fn new(instance: ModelInstance) -> Self {
        let mode = if instance.n() <= N_MAX_EXACT { EngineMode::Exact } else { EngineMode::Mcmc };
        Self::with_mode(instance, mode).expect("mode chosen from N")
    }

    pub fn with_mode(instance: ModelInstance, mode: EngineMode) -> Result<Self> {
        if mode == EngineMode::Exact {
            check_exact(instance.n())?;
        }
        Ok(Self {
            instance,
            mode,
            mcmc: McmcSettings::default(),
            log_partition: OnceLock::new(),
            moments: OnceLock::new(),
            table: OnceLock::new(),
        })
    }

    pub fn with_mcmc_settings(mut self, settings: McmcSettings) -> Self {
        self.mcmc = settings;
        self
    }

    pub fn instance(&self) -> &ModelInstance {
        &self.instance
    }

    pub fn mode(&self) -> EngineMode {
        self.mode
    }

    pub fn mcmc_settings(&self) -> McmcSettings {
        self.mcmc
    }

    pub fn is_exact(&self) -> bool {
        self.mode == EngineMode::Exact
    }

    fn require_exact(&self) -> Result<()> {
        if self.is_exact() {
            Ok(())
        } else {
            Err(Error::TooLargeForExact { n: self.instance.n(), limit: N_MAX_EXACT })
        }
    }

    pub fn log_partition(&self) -> Result<f64> {
        self.require_exact()?;
        Ok(*self.log_partition.get_or_init(|| compute_log_partition(&self.instance)))
    }

    pub fn free_energy_per_site(&self) -> Result<f64> {
        Ok(self.log_partition()? / self.instance.n() as f64)
    }

    pub fn moments(&self) -> Result<&ExactMoments> {
        let log_z = self.log_partition()?;
        Ok(self.moments.get_or_init(|| compute_moments(&self.instance, log_z)))
    }

    pub fn feature_averages(&self) -> Result<&[f64]> {
        Ok(&self.moments()?.feature_means)
    }

    pub fn pair_overlap_moment(&self) -> Result<f64> {
        Ok(self.moments()?.pair_overlap(self.instance.n()))
    }

    /// Exact `<phi(sigma)>` for a function of the packed configuration bits and feature values.
    pub fn expectation<F>(&self, phi: F) -> Result<f64>
    where
        F: Fn(u64, &[f64]) -> f64 + Sync,
    {
        let log_z = self.log_partition()?;
        let walker = Walker::new(&self.instance);
        let parts = walker.par_chunks(CompensatedSum::new, |acc, _, bits, lw, f| {
            acc.add((lw - log_z).exp() * phi(bits, f));
        });
        let mut total = CompensatedSum::new();
        for p in &parts {
            total.merge(p);
        }
        Ok(total.value())
    }

    /// Exact `<f_alpha f_alpha'>` for every pair of features, row-major.
    pub fn feature_second_moments(&self) -> Result<Vec<Vec<f64>>> {
        let log_z = self.log_partition()?;
        let count = self.instance.feature_count();
        let walker = Walker::new(&self.instance);
        let parts = walker.par_chunks(
            || vec![CompensatedSum::new(); count * count],
            |acc, _, _, lw, f| {
                let p = (lw - log_z).exp();
                for a in 0..count {
                    let pa = p * f[a];
                    for b in a..count {
                        acc[a * count + b].add(pa * f[b]);
                    }
                }
            },
        );
        let mut out = vec![vec![0.0; count]; count];
        for a in 0..count {
            for b in a..count {
                let mut s = CompensatedSum::new();
                for part in &parts {
                    s.merge(&part[a * count + b]);
                }
                out[a][b] = s.value();
                out[b][a] = s.value();
            }
        }
        Ok(out)
    }

    /// Exact connected covariance `<f_alpha f_alpha'> - <f_alpha><f_alpha'>`.
    pub fn feature_covariance(&self) -> Result<Vec<Vec<f64>>> {
        let mut second = self.feature_second_moments()?;
        let means = self.feature_averages()?;
        for (a, row) in second.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v -= means[a] * means[b];
            }
        }
        Ok(second)
    }

    /// The cumulative table used by the exact sampler; built once on first use.
    pub fn cdf_table(&self) -> Result<Arc<CdfTable>> {
        self.require_exact()?;
        Ok(self
            .table
            .get_or_init(|| {
                let walker = Walker::new(&self.instance);
                let mut values = vec![0.0; walker.states() as usize];
                walker.fill_log_weights(&mut values);
                Arc::new(CdfTable::from_log_weights(self.instance.n(), values))
            })
            .clone())
    }

    /// i.i.d. exact draws; identical `stream_seed` gives an identical sequence.
    pub fn exact_replica_sampler(&self, stream_seed: u64) -> Result<ExactSampler> {
        Ok(ExactSampler::new(self.cdf_table()?, stream_seed))
    }

    /// An unbounded Glauber chain with this ensemble's burn-in and thinning.
    pub fn mcmc_chain(&self, stream_seed: u64) -> McmcSampler<'_> {
        McmcSampler::unbounded(&self.instance, self.mcmc, stream_seed)
    }

    /// Replica tuples of size `replicas` from whichever engine the mode selects.
    pub fn replica_sampler(&self, replicas: usize, stream_seed: u64) -> Result<ReplicaSampler<'_>> {
        match self.mode {
            EngineMode::Exact => Ok(ReplicaSampler::Exact(self.exact_replica_sampler(stream_seed)?)),
            EngineMode::Mcmc => Ok(ReplicaSampler::Mcmc(
                (0..replicas).map(|r| self.mcmc_chain(sampler::chain_seed(stream_seed, r))).collect(),
            )),
        }
    }
}

pub fn log_partition(instance: &ModelInstance) -> Result<f64> {
    check_exact(instance.n())?;
    Ok(compute_log_partition(instance))
}

/// `psi_N = (1/N) log Z`.
pub fn free_energy_per_site(instance: &ModelInstance) -> Result<f64> {
    Ok(log_partition(instance)? / instance.n() as f64)
}

pub fn exact_moments(instance: &ModelInstance) -> Result<ExactMoments> {
    let log_z = log_partition(instance)?;
    Ok(compute_moments(instance, log_z))
}

pub fn feature_averages(instance: &ModelInstance) -> Result<Vec<f64>> {
    Ok(exact_moments(instance)?.feature_means)
}

pub fn pair_overlap_moment(instance: &ModelInstance) -> Result<f64> {
    Ok(exact_moments(instance)?.pair_overlap(instance.n()))
}

/// Glauber sampler; see [`McmcSampler`] for the sweep schedule.
pub fn mcmc_sampler(
    instance: &ModelInstance,
    sweeps: usize,
    burn_in: usize,
    thin: usize,
    stream_seed: u64,
) -> Result<McmcSampler<'_>> {
    McmcSampler::new(instance, sweeps, burn_in, thin, stream_seed)
}

#[cfg(test)]
mod tests;
