use std::sync::Arc;

use rand::RngCore;
use rand_chacha::ChaCha12Rng;

use super::enumerate::gray;
use crate::error::{Error, Result};
use crate::model::ModelInstance;
use crate::rng::{self, Lane};
use crate::spin::SpinConfiguration;

/// Unnormalized cumulative Gibbs weights in Gray-code order.
///
/// Holds `2^N` doubles: 128 MiB at `N = 24`.
#[derive(Debug)]
pub struct CdfTable {
    n: usize,
    cumulative: Vec<f64>,
}

impl CdfTable {
    /// Builds the table from per-position log-weights.
    pub(crate) fn from_log_weights(n: usize, mut values: Vec<f64>) -> Self {
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut running = 0.0;
        for v in values.iter_mut() {
            running += (*v - max).exp();
            *v = running;
        }
        Self { n, cumulative: values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    /// Probability of the configuration at Gray position `k`.
    pub fn probability(&self, k: usize) -> f64 {
        let total = *self.cumulative.last().expect("non-empty table");
        let prev = if k == 0 { 0.0 } else { self.cumulative[k - 1] };
        (self.cumulative[k] - prev) / total
    }

    /// Configuration bits for a uniform `u` in (0, 1).
    #[inline]
    pub fn invert(&self, u: f64) -> u64 {
        let total = *self.cumulative.last().expect("non-empty table");
        let target = u * total;
        let k = self.cumulative.partition_point(|&c| c <= target).min(self.cumulative.len() - 1);
        gray(k as u64)
    }
}

/// Exact i.i.d. draws from `G_N` by inverse CDF over the enumerated weights.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    table: Arc<CdfTable>,
    rng: ChaCha12Rng,
}

impl ExactSampler {
    pub(crate) fn new(table: Arc<CdfTable>, stream_seed: u64) -> Self {
        Self { table, rng: rng::stream(stream_seed, 0, Lane::Replica) }
    }

    /// Packed configuration bits of the next draw.
    #[inline]
    pub fn next_bits(&mut self) -> u64 {
        let u = rng::uniform(&mut self.rng);
        self.table.invert(u)
    }

    pub fn draw(&mut self) -> SpinConfiguration {
        let bits = self.next_bits();
        SpinConfiguration::from_bits(self.table.n, bits)
    }
}

impl Iterator for ExactSampler {
    type Item = SpinConfiguration;

    fn next(&mut self) -> Option<SpinConfiguration> {
        Some(self.draw())
    }
}

/// Burn-in and thinning for Glauber dynamics, both in sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct McmcSettings {
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self { burn_in: 100, thin: 10 }
    }
}

/// Single-site heat-bath (Glauber) dynamics with sequential sweeps.
///
/// A sweep visits sites `0..N` in order and flips site `i` with probability
/// `1 / (1 + exp(Delta H_i))`. After `burn_in` sweeps the sampler yields the
/// configuration every `thin` sweeps until the sweep budget is spent.
/// Equilibration is the caller's responsibility.
#[derive(Clone, Debug)]
pub struct McmcSampler<'a> {
    instance: &'a ModelInstance,
    config: SpinConfiguration,
    rng: ChaCha12Rng,
    burn_in: usize,
    thin: usize,
    remaining: usize,
    burned: bool,
}

impl<'a> McmcSampler<'a> {
    /// `sweeps` is the total budget including burn-in; `usize::MAX` runs unbounded.
    pub fn new(instance: &'a ModelInstance, sweeps: usize, burn_in: usize, thin: usize, stream_seed: u64) -> Result<Self> {
        if sweeps <= burn_in {
            return Err(Error::InvalidArgument(format!("sweeps ({sweeps}) must exceed burn_in ({burn_in})")));
        }
        if thin == 0 {
            return Err(Error::InvalidArgument("thin must be at least 1".into()));
        }
        let mut rng = rng::stream(stream_seed, 0, Lane::Mcmc);
        let config = SpinConfiguration::random(instance.n(), &mut rng);
        Ok(Self { instance, config, rng, burn_in, thin, remaining: sweeps, burned: false })
    }

    pub fn unbounded(instance: &'a ModelInstance, settings: McmcSettings, stream_seed: u64) -> Self {
        Self::new(instance, usize::MAX, settings.burn_in, settings.thin.max(1), stream_seed)
            .expect("valid unbounded settings")
    }

    pub fn sweep(&mut self) {
        for site in 0..self.instance.n() {
            let delta = self.instance.energy_delta_unchecked(&self.config, site);
            let flip_probability = 1.0 / (1.0 + delta.exp());
            if rng::uniform(&mut self.rng) < flip_probability {
                self.config.flip(site);
            }
        }
    }

    pub fn current(&self) -> &SpinConfiguration {
        &self.config
    }
}

impl Iterator for McmcSampler<'_> {
    type Item = SpinConfiguration;

    fn next(&mut self) -> Option<SpinConfiguration> {
        if !self.burned {
            for _ in 0..self.burn_in {
                self.sweep();
            }
            self.remaining -= self.burn_in;
            self.burned = true;
        }
        if self.remaining < self.thin {
            return None;
        }
        for _ in 0..self.thin {
            self.sweep();
        }
        if self.remaining != usize::MAX {
            self.remaining -= self.thin;
        }
        Some(self.config.clone())
    }
}

/// Draws tuples of independent replicas from either engine.
///
/// MCMC replicas come from one independent chain per replica slot.
pub enum ReplicaSampler<'a> {
    Exact(ExactSampler),
    Mcmc(Vec<McmcSampler<'a>>),
}

impl ReplicaSampler<'_> {
    pub fn draw_tuple(&mut self, replicas: usize) -> Vec<SpinConfiguration> {
        match self {
            ReplicaSampler::Exact(s) => (0..replicas).map(|_| s.draw()).collect(),
            ReplicaSampler::Mcmc(chains) => {
                assert_eq!(chains.len(), replicas, "sampler built for {} replicas", chains.len());
                chains.iter_mut().map(|c| c.next().expect("unbounded chain")).collect()
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ReplicaSampler::Exact(_))
    }
}

pub(crate) fn chain_seed(stream_seed: u64, replica: usize) -> u64 {
    let mut rng = rng::stream(stream_seed, replica as u64, Lane::Mcmc);
    rng.next_u64()
}
