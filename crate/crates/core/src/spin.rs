use std::fmt;

use rand::RngCore;

use crate::error::{Error, Result};

/// One replica: `N` Ising spins, bit-packed. A set bit is spin `+1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    len: usize,
    words: Vec<u64>,
}

impl SpinConfiguration {
    pub fn all_plus(n: usize) -> Self {
        let mut words = vec![u64::MAX; n.div_ceil(64)];
        if let Some(last) = words.last_mut() {
            let used = n % 64;
            if used != 0 {
                *last = (1u64 << used) - 1;
            }
        }
        Self { len: n, words }
    }

    pub fn all_minus(n: usize) -> Self {
        Self { len: n, words: vec![0; n.div_ceil(64)] }
    }

    /// `+1, -1, +1, ...` starting with `+1` at site 0.
    pub fn alternating(n: usize) -> Self {
        let mut config = Self::all_minus(n);
        for i in (0..n).step_by(2) {
            config.set(i, 1);
        }
        config
    }

    /// Builds a configuration from explicit `±1` values.
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut config = Self::all_minus(spins.len());
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => config.set(i, 1),
                -1 => {}
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "spin {i} has value {other}; spins must be -1 or +1"
                    )))
                }
            }
        }
        Ok(config)
    }

    /// Configuration whose bit `i` of `bits` is spin `i` (requires `n <= 64`).
    pub fn from_bits(n: usize, bits: u64) -> Self {
        assert!(n <= 64, "from_bits supports at most 64 spins");
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let words = if n == 0 { Vec::new() } else { vec![bits & mask] };
        Self { len: n, words }
    }

    pub fn random<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..n.div_ceil(64)).map(|_| rng.next_u64()).collect();
        if let Some(last) = words.last_mut() {
            let used = n % 64;
            if used != 0 {
                *last &= (1u64 << used) - 1;
            }
        }
        Self { len: n, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Spin at `site` as `±1`.
    #[inline]
    pub fn get(&self, site: usize) -> i8 {
        debug_assert!(site < self.len);
        if (self.words[site / 64] >> (site % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn value(&self, site: usize) -> f64 {
        f64::from(self.get(site))
    }

    #[inline]
    fn set(&mut self, site: usize, spin: i8) {
        let bit = 1u64 << (site % 64);
        if spin > 0 {
            self.words[site / 64] |= bit;
        } else {
            self.words[site / 64] &= !bit;
        }
    }

    #[inline]
    pub fn flip(&mut self, site: usize) {
        assert!(site < self.len, "site {site} out of range for N = {}", self.len);
        self.words[site / 64] ^= 1u64 << (site % 64);
    }

    pub fn flipped(&self, site: usize) -> Self {
        let mut out = self.clone();
        out.flip(site);
        out
    }

    /// Global spin flip.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.len {
            out.flip(i);
        }
        out
    }

    /// Product of the spins at `sites`.
    #[inline]
    pub fn product(&self, sites: &[usize]) -> f64 {
        let minus = sites.iter().filter(|&&i| self.get(i) < 0).count();
        if minus % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Packed representation when `N <= 64`.
    pub fn bits(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn spins(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_vec(&self) -> Vec<i8> {
        self.spins().collect()
    }
}

impl fmt::Debug for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.spins().map(|s| if s > 0 { '+' } else { '-' }).collect();
        write!(f, "SpinConfiguration({s})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constructors() {
        assert_eq!(SpinConfiguration::all_plus(3).to_vec(), vec![1, 1, 1]);
        assert_eq!(SpinConfiguration::all_minus(2).to_vec(), vec![-1, -1]);
        assert_eq!(SpinConfiguration::alternating(5).to_vec(), vec![1, -1, 1, -1, 1]);
        assert_eq!(SpinConfiguration::from_bits(3, 0b101).to_vec(), vec![1, -1, 1]);
        assert_eq!(SpinConfiguration::all_plus(70).spins().filter(|&s| s == 1).count(), 70);
    }

    #[test]
    fn rejects_non_ising_values() {
        assert!(SpinConfiguration::from_spins(&[1, 0, -1]).is_err());
        assert!(SpinConfiguration::from_spins(&[1, 2]).is_err());
    }

    #[test]
    fn product_of_sites() {
        let c = SpinConfiguration::from_spins(&[1, -1, -1, 1]).unwrap();
        assert_eq!(c.product(&[0, 3]), 1.0);
        assert_eq!(c.product(&[0, 1]), -1.0);
        assert_eq!(c.product(&[1, 2]), 1.0);
        assert_eq!(c.product(&[]), 1.0);
    }

    proptest! {
        #[test]
        fn from_spins_round_trips(spins in prop::collection::vec(prop::bool::ANY, 0..150)) {
            let spins: Vec<i8> = spins.into_iter().map(|b| if b { 1 } else { -1 }).collect();
            let config = SpinConfiguration::from_spins(&spins).unwrap();
            prop_assert_eq!(config.len(), spins.len());
            prop_assert_eq!(config.to_vec(), spins);
        }

        #[test]
        fn flip_is_an_involution(bits in any::<u64>(), n in 1usize..64, site in 0usize..64) {
            let site = site % n;
            let config = SpinConfiguration::from_bits(n, bits);
            let back = config.flipped(site).flipped(site);
            prop_assert_eq!(back, config.clone());
            prop_assert_eq!(config.flipped(site).get(site), -config.get(site));
        }
    }
}
