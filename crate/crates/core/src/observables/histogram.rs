use serde::{Deserialize, Serialize};

use super::{bin_index, check_self_overlap, overlap_matrix};
use crate::error::{Error, Result};
use crate::gibbs::GibbsEnsemble;

/// Odd, so one bin is centred on zero.
pub const DEFAULT_BINS: usize = 41;

/// Empirical law of `R_{1,2}` on uniform bins over `[-R_{1,1}, R_{1,1}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapHistogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<u64>,
    pub total: u64,
    /// Values found outside the support by more than rounding.
    pub outside: u64,
}

impl OverlapHistogram {
    pub fn new(r11: f64, bins: usize) -> Self {
        Self { lower: -r11, upper: r11, counts: vec![0; bins], total: 0, outside: 0 }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn push(&mut self, value: f64) {
        if value.abs() > self.upper * (1.0 + 1e-12) {
            self.outside += 1;
        }
        let bin = bin_index(value, self.upper, self.counts.len());
        self.counts[bin] += 1;
        self.total += 1;
    }

    pub fn edges(&self) -> Vec<f64> {
        let bins = self.bins();
        (0..=bins).map(|k| self.lower + (self.upper - self.lower) * k as f64 / bins as f64).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    pub fn total_variation(&self, other: &OverlapHistogram) -> Result<f64> {
        if self.bins() != other.bins() || self.upper != other.upper {
            return Err(Error::InvalidArgument("histograms have different binning".into()));
        }
        Ok(total_variation(&self.probabilities(), &other.probabilities()))
    }
}

pub(crate) fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Histogram of `R_{1,2}` over `pairs` independent replica pairs.
pub fn overlap_histogram(ensemble: &GibbsEnsemble, pairs: usize, bins: usize, stream_seed: u64) -> Result<OverlapHistogram> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be positive".into()));
    }
    let instance = ensemble.instance();
    let r11 = check_self_overlap(instance)?;
    let mut sampler = ensemble.replica_sampler(2, stream_seed)?;
    let mut hist = OverlapHistogram::new(r11, bins);
    for _ in 0..pairs {
        let tuple = sampler.draw_tuple(2);
        hist.push(overlap_matrix(instance, &tuple)[0][1]);
    }
    Ok(hist)
}
