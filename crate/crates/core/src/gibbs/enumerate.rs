//! Reflected-binary Gray-code walk over `{-1,1}^N`.
//!
//! The walk is cut into fixed-size chunks. Each chunk rebuilds its starting
//! state from scratch and then applies single-spin updates, so chunks can run
//! on any thread and floating-point drift is bounded by the chunk length. Chunk
//! boundaries depend only on `N`, which keeps every reduction order fixed.

use rayon::prelude::*;

use crate::model::{Feature, ModelInstance};
use crate::spin::SpinConfiguration;
use crate::stats::CompensatedSum;

/// Gray-code chunk length is `2^CHUNK_BITS` states.
const CHUNK_BITS: usize = 14;

#[inline]
pub(crate) fn gray(k: u64) -> u64 {
    k ^ (k >> 1)
}

#[inline]
fn parity_sign(bits: u64, mask: u64) -> f64 {
    // Spin -1 is a cleared bit; the product is -1 for an odd number of them.
    if (mask & !bits).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn site_mask(sites: &[usize]) -> u64 {
    sites.iter().fold(0u64, |m, &i| m | (1u64 << i))
}

/// A model flattened for fast single-flip updates.
pub(crate) struct Walker<'a> {
    instance: &'a ModelInstance,
    n: usize,
    term_masks: Vec<u64>,
    term_couplings: Vec<f64>,
    /// `Some(mask)` for monomial features, `None` for custom ones.
    feature_masks: Vec<Option<u64>>,
    /// `gamma * g_alpha`.
    feature_weights: Vec<f64>,
    has_custom: bool,
}

impl<'a> Walker<'a> {
    pub(crate) fn new(instance: &'a ModelInstance) -> Self {
        let n = instance.n();
        assert!(n < 64, "enumeration requires N < 64");
        let terms = instance.base().terms();
        let features = instance.features();
        let feature_masks: Vec<Option<u64>> = features
            .iter()
            .map(|f| match f {
                Feature::Monomial(sites) => Some(site_mask(sites)),
                Feature::Custom { .. } => None,
            })
            .collect();
        let has_custom = instance.base().custom().is_some() || feature_masks.iter().any(Option::is_none);
        Self {
            instance,
            n,
            term_masks: terms.iter().map(|t| site_mask(&t.sites)).collect(),
            term_couplings: terms.iter().map(|t| t.coupling).collect(),
            feature_masks,
            feature_weights: instance.perturbation().iter().map(|g| instance.gamma() * g).collect(),
            has_custom,
        }
    }

    pub(crate) fn states(&self) -> u64 {
        1u64 << self.n
    }

    fn chunk_len(&self) -> u64 {
        1u64 << self.n.min(CHUNK_BITS)
    }

    pub(crate) fn chunk_count(&self) -> usize {
        (self.states() / self.chunk_len()) as usize
    }

    /// Visits Gray positions `start..end` in order as `(position, bits, log_weight, features)`.
    pub(crate) fn walk<F>(&self, start: u64, end: u64, mut visit: F)
    where
        F: FnMut(u64, u64, f64, &[f64]),
    {
        let features = self.instance.features();
        let mut bits = gray(start);
        let config = |bits: u64| SpinConfiguration::from_bits(self.n, bits);

        let mut term_values: Vec<f64> = self.term_masks.iter().map(|&m| parity_sign(bits, m)).collect();
        let start_config = if self.has_custom { Some(config(bits)) } else { None };
        let mut feature_values: Vec<f64> = self
            .feature_masks
            .iter()
            .enumerate()
            .map(|(a, m)| match m {
                Some(mask) => parity_sign(bits, *mask),
                None => features.get(a).eval(start_config.as_ref().expect("custom feature")),
            })
            .collect();
        let custom_base = self.instance.base().custom();
        let mut custom_base_value = match (custom_base, &start_config) {
            (Some(f), Some(c)) => f(c),
            _ => 0.0,
        };

        let mut log_weight = self.instance.base().constant() + custom_base_value;
        for (c, v) in self.term_couplings.iter().zip(&term_values) {
            log_weight += c * v;
        }
        for (w, v) in self.feature_weights.iter().zip(&feature_values) {
            log_weight += w * v;
        }
        visit(start, bits, log_weight, &feature_values);

        for k in start + 1..end {
            let site = k.trailing_zeros() as usize;
            bits ^= 1u64 << site;
            for &t in self.instance.base_incident(site) {
                term_values[t] = -term_values[t];
                log_weight += 2.0 * self.term_couplings[t] * term_values[t];
            }
            let current = if self.has_custom { Some(config(bits)) } else { None };
            for &a in features.incident(site) {
                match self.feature_masks[a] {
                    Some(_) => {
                        feature_values[a] = -feature_values[a];
                        log_weight += 2.0 * self.feature_weights[a] * feature_values[a];
                    }
                    None => {
                        let value = features.get(a).eval(current.as_ref().expect("custom feature"));
                        log_weight += self.feature_weights[a] * (value - feature_values[a]);
                        feature_values[a] = value;
                    }
                }
            }
            if let (Some(f), Some(c)) = (custom_base, &current) {
                let value = f(c);
                log_weight += value - custom_base_value;
                custom_base_value = value;
            }
            visit(k, bits, log_weight, &feature_values);
        }
    }

    /// Runs `visit` over every chunk in parallel and returns the per-chunk accumulators in chunk order.
    pub(crate) fn par_chunks<A, I, F>(&self, init: I, visit: F) -> Vec<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, u64, u64, f64, &[f64]) + Sync,
    {
        let len = self.chunk_len();
        (0..self.chunk_count())
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                let start = c as u64 * len;
                self.walk(start, start + len, |k, bits, lw, f| visit(&mut acc, k, bits, lw, f));
                acc
            })
            .collect()
    }

    /// Writes the log-weight of Gray position `k` into `out[k]`.
    pub(crate) fn fill_log_weights(&self, out: &mut [f64]) {
        let len = self.chunk_len() as usize;
        assert_eq!(out.len() as u64, self.states());
        out.par_chunks_mut(len).enumerate().for_each(|(c, slot)| {
            let start = (c * len) as u64;
            self.walk(start, start + len as u64, |k, _, lw, _| slot[(k - start) as usize] = lw);
        });
    }
}

/// Streaming log-sum-exp with a running maximum.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSumExp {
    max: f64,
    sum: CompensatedSum,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, sum: CompensatedSum::new() }
    }
}

impl LogSumExp {
    #[inline]
    pub(crate) fn push(&mut self, x: f64) {
        if x > self.max {
            if self.max > f64::NEG_INFINITY {
                self.sum.scale((self.max - x).exp());
            }
            self.max = x;
        }
        self.sum.add((x - self.max).exp());
    }

    /// Combines chunk accumulators in the given order.
    pub(crate) fn combine(parts: &[LogSumExp]) -> f64 {
        let max = parts.iter().map(|p| p.max).fold(f64::NEG_INFINITY, f64::max);
        let mut total = CompensatedSum::new();
        for p in parts {
            if p.max > f64::NEG_INFINITY {
                total.add(p.sum.value() * (p.max - max).exp());
            }
        }
        max + total.value().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_sk;

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for k in 1..4096u64 {
            assert_eq!((gray(k) ^ gray(k - 1)).count_ones(), 1);
            assert_eq!(gray(k) ^ gray(k - 1), 1 << k.trailing_zeros());
        }
    }

    #[test]
    fn gray_code_is_a_permutation() {
        let mut seen = vec![false; 1 << 10];
        for k in 0..1u64 << 10 {
            let g = gray(k) as usize;
            assert!(!seen[g]);
            seen[g] = true;
        }
    }

    #[test]
    fn walk_log_weights_match_direct_evaluation() {
        let m = build_sk(9, 1.2, 0.7, 0.25, 4, 1).unwrap();
        let walker = Walker::new(&m);
        walker.walk(0, walker.states(), |_, bits, lw, f| {
            let c = SpinConfiguration::from_bits(9, bits);
            assert!((lw - m.log_weight(&c)).abs() < 1e-12);
            assert_eq!(f, &m.feature_values(&c)[..]);
        });
    }

    #[test]
    fn walk_from_mid_range_start() {
        let m = build_sk(6, 1.0, 0.3, 0.1, 2, 0).unwrap();
        let walker = Walker::new(&m);
        walker.walk(37, 64, |k, bits, lw, _| {
            assert_eq!(bits, gray(k));
            let c = SpinConfiguration::from_bits(6, bits);
            assert!((lw - m.log_weight(&c)).abs() < 1e-12);
        });
    }

    #[test]
    fn log_sum_exp_handles_large_spreads() {
        let mut acc = LogSumExp::default();
        for x in [-1e4, 3.0, 1e4, 1e4 - 1.0] {
            acc.push(x);
        }
        let expected = 1e4 + (1.0 + (-1.0f64).exp()).ln();
        assert!((LogSumExp::combine(&[acc]) - expected).abs() < 1e-10);
    }
}
