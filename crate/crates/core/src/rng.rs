//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha12 keystream
//! selected by `(master seed, index, lane)`. The master seed keys the cipher,
//! the index and lane select the 64-bit stream id, and the position inside
//! the keystream is the draw counter. A draw therefore depends only on its
//! key and its position, never on scheduling or on how many other streams
//! were consumed before it.
//!
//! Gaussians come from the inverse normal CDF (Wichura's AS 241, PPND16)
//! applied to `u = (k + 1/2) / 2^52`, where `k` is the top 52 bits of the
//! next 64-bit output. The transform is implemented here rather than taken
//! from a statistics crate so that disorder realizations stay bit-identical
//! across dependency upgrades.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Independent sub-streams derived from one `(master seed, index)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lane {
    /// Couplings living inside the base measure (e.g. SK's `g_ij`).
    Base,
    /// The gaussian field coupled through `gamma`.
    Perturbation,
    /// Probe configurations used by model validation.
    Probe,
    /// Exact replica draws.
    Replica,
    /// Glauber dynamics.
    Mcmc,
    /// Random choices made by checks (pair selection and the like).
    Selection,
    /// Plain Monte Carlo over gaussian inputs.
    Gaussian,
}

impl Lane {
    fn code(self) -> u64 {
        match self {
            Lane::Base => 1,
            Lane::Perturbation => 2,
            Lane::Probe => 3,
            Lane::Replica => 4,
            Lane::Mcmc => 5,
            Lane::Selection => 6,
            Lane::Gaussian => 7,
        }
    }
}

const KEY_TAG: u64 = 0x6767_6c61_625f_7631; // "gglab_v1"

/// Largest index accepted by [`stream`]; the low byte of the stream id holds the lane.
pub const MAX_INDEX: u64 = (1 << 56) - 1;

/// Opens the keystream for `(master, index, lane)` at draw counter zero.
pub fn stream(master: u64, index: u64, lane: Lane) -> ChaCha12Rng {
    assert!(index <= MAX_INDEX, "stream index {index} exceeds 2^56 - 1");
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&KEY_TAG.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(seed);
    rng.set_stream((index << 8) | lane.code());
    rng
}

/// Derives a child seed from a parent seed, for APIs that accept a single `stream_seed`.
pub fn derive_seed(master: u64, index: u64, lane: Lane) -> u64 {
    stream(master, index, lane).next_u64()
}

/// Maps a raw 64-bit word to the open interval (0, 1).
#[inline]
pub fn open_unit(word: u64) -> f64 {
    ((word >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Draws one uniform from (0, 1).
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    open_unit(rng.next_u64())
}

/// Draws one standard gaussian by inverse CDF.
#[inline]
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    normal_quantile(uniform(rng))
}

/// Fills a vector with `count` standard gaussians from the `(master, index, lane)` stream.
pub fn gaussians(master: u64, index: u64, lane: Lane, count: usize) -> Vec<f64> {
    let mut rng = stream(master, index, lane);
    (0..count).map(|_| standard_normal(&mut rng)).collect()
}

/// Uniform integer in `0..bound`.
pub fn below<R: Rng + ?Sized>(rng: &mut R, bound: usize) -> usize {
    rng.random_range(0..bound)
}

// AS 241 coefficients, highest degree first.
const CENTRAL_NUM: [f64; 8] = [
    2.5090809287301226727e3,
    3.3430575583588128105e4,
    6.7265770927008700853e4,
    4.5921953931549871457e4,
    1.3731693765509461125e4,
    1.9715909503065514427e3,
    1.3314166789178437745e2,
    3.3871328727963666080e0,
];
const CENTRAL_DEN: [f64; 8] = [
    5.2264952788528545610e3,
    2.8729085735721942674e4,
    3.9307895800092710610e4,
    2.1213794301586595867e4,
    5.3941960214247511077e3,
    6.8718700749205790830e2,
    4.2313330701600911252e1,
    1.0,
];
const NEAR_NUM: [f64; 8] = [
    7.74545014278341407640e-4,
    2.27238449892691845833e-2,
    2.41780725177450611770e-1,
    1.27045825245236838258e0,
    3.64784832476320460504e0,
    5.76949722146069140550e0,
    4.63033784615654529590e0,
    1.42343711074968357734e0,
];
const NEAR_DEN: [f64; 8] = [
    1.05075007164441684324e-9,
    5.47593808499534494600e-4,
    1.51986665636164571966e-2,
    1.48103976427480074590e-1,
    6.89767334985100004550e-1,
    1.67638483018380384940e0,
    2.05319162663775882187e0,
    1.0,
];
const FAR_NUM: [f64; 8] = [
    2.01033439929228813265e-7,
    2.71155556874348757815e-5,
    1.24266094738807843860e-3,
    2.65321895265761230930e-2,
    2.96560571828504891230e-1,
    1.78482653991729133580e0,
    5.46378491116411436990e0,
    6.65790464350110377720e0,
];
const FAR_DEN: [f64; 8] = [
    2.04426310338993978564e-15,
    1.42151175831644588870e-7,
    1.84631831751005468180e-5,
    7.86869131145613259100e-4,
    1.48753612908506148525e-2,
    1.36929880922735805310e-1,
    5.99832206555887937690e-1,
    1.0,
];

#[inline]
fn horner(coefficients: &[f64; 8], x: f64) -> f64 {
    coefficients.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Inverse of the standard normal CDF for `p` in (0, 1), AS 241 (PPND16).
///
/// Relative accuracy is about 1e-16 over the whole range.
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "quantile argument {p} outside (0, 1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * horner(&CENTRAL_NUM, r) / horner(&CENTRAL_DEN, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let value = if r <= 5.0 {
        let r = r - 1.6;
        horner(&NEAR_NUM, r) / horner(&NEAR_DEN, r)
    } else {
        let r = r - 5.0;
        horner(&FAR_NUM, r) / horner(&FAR_DEN, r)
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}
