//! Concrete models expressed in the generalized `(mu_N, f_alpha, g_alpha, gamma)` form.
//!
//! Gaussian order is part of the reproducibility contract:
//! * SK base: `g_ij` for `i < j` in lexicographic order.
//! * p-spin base: `g_{i_1..i_p}` over lexicographic `p`-subsets.
//! * perturbation: `g_alpha` in feature order (sites, then edges as returned by
//!   [`lattice_edges`](super::lattice_edges)).

use std::sync::Arc;

use super::features::{combinations, lattice_edges, FeatureSet};
use super::instance::{BaseWeights, DisorderKey, DisorderRealization, Interaction, ModelInstance, ModelKind};
use crate::error::{Error, Result};
use crate::rng::{self, Lane};

fn draw(key: DisorderKey, base_count: usize, perturbation_count: usize) -> DisorderRealization {
    DisorderRealization {
        key,
        base: rng::gaussians(key.master_seed, key.base_index, Lane::Base, base_count),
        perturbation: rng::gaussians(key.master_seed, key.perturbation_index, Lane::Perturbation, perturbation_count),
    }
}

fn field_terms(n: usize, h: f64) -> impl Iterator<Item = Interaction> {
    (0..n).filter(move |_| h != 0.0).map(move |i| Interaction { sites: vec![i], coupling: h })
}

fn sk_base(kind: &ModelKind, n: usize, g: &[f64]) -> BaseWeights {
    let ModelKind::Sk { beta, h } = *kind else { unreachable!("sk_base on {kind:?}") };
    let scale = beta / (n as f64).sqrt();
    let mut terms = Vec::with_capacity(g.len() + n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if beta != 0.0 {
                terms.push(Interaction { sites: vec![i, j], coupling: scale * g[k] });
            }
            k += 1;
        }
    }
    terms.extend(field_terms(n, h));
    BaseWeights::from_terms(terms)
}

/// SK with a random external field:
/// `-H_N = (beta/sqrt N) sum_{i<j} g_ij s_i s_j + h sum_i s_i + gamma sum_i g_i s_i`.
///
/// The coupling and uniform-field terms form `log mu_N`; the features are the
/// sites, so the generalized overlap is the usual site overlap.
pub fn build_sk(n: usize, beta: f64, gamma: f64, h: f64, master_seed: u64, sample_index: u64) -> Result<ModelInstance> {
    build_sk_keyed(n, beta, gamma, h, DisorderKey::new(master_seed, sample_index))
}

pub fn build_sk_keyed(n: usize, beta: f64, gamma: f64, h: f64, key: DisorderKey) -> Result<ModelInstance> {
    if n == 0 {
        return Err(Error::InvalidModel("N must be positive".into()));
    }
    let kind = ModelKind::Sk { beta, h };
    let disorder = draw(key, n * (n - 1) / 2, n);
    let base = sk_base(&kind, n, &disorder.base);
    ModelInstance::assemble(n, kind, gamma, base, Arc::new(FeatureSet::sites(n)), disorder, Some(sk_base))
}

/// Edwards-Anderson on a hypercubic lattice: uniform `mu_N`, one bond feature
/// `s_i s_j` per nearest-neighbour edge, `gamma` acting as inverse temperature.
pub fn build_ea(dims: &[usize], periodic: bool, gamma: f64, master_seed: u64, sample_index: u64) -> Result<ModelInstance> {
    build_ea_keyed(dims, periodic, gamma, DisorderKey::new(master_seed, sample_index))
}

pub fn build_ea_keyed(dims: &[usize], periodic: bool, gamma: f64, key: DisorderKey) -> Result<ModelInstance> {
    let (n, edges) = lattice_edges(dims, periodic)?;
    if n < 2 {
        return Err(Error::InvalidModel(format!("lattice {dims:?} has fewer than two sites")));
    }
    let features = FeatureSet::bonds(n, &edges)?;
    let disorder = draw(key, 0, features.len());
    let kind = ModelKind::Ea { dims: dims.to_vec(), periodic };
    ModelInstance::assemble(n, kind, gamma, BaseWeights::uniform(), Arc::new(features), disorder, None)
}

fn rfim_base(kind: &ModelKind, _n: usize, _g: &[f64]) -> BaseWeights {
    let ModelKind::Rfim { dims, periodic, coupling } = kind else { unreachable!("rfim_base on {kind:?}") };
    let (_, edges) = lattice_edges(dims, *periodic).expect("validated at construction");
    BaseWeights::from_terms(
        edges.into_iter().map(|(i, j)| Interaction { sites: vec![i, j], coupling: *coupling }).collect(),
    )
}

/// Random field Ising model: ferromagnetic `coupling * sum_<ij> s_i s_j` in
/// `mu_N`, site features carrying the random field `gamma g_i`.
pub fn build_rfim(
    dims: &[usize],
    periodic: bool,
    coupling: f64,
    gamma: f64,
    master_seed: u64,
    sample_index: u64,
) -> Result<ModelInstance> {
    build_rfim_keyed(dims, periodic, coupling, gamma, DisorderKey::new(master_seed, sample_index))
}

pub fn build_rfim_keyed(dims: &[usize], periodic: bool, coupling: f64, gamma: f64, key: DisorderKey) -> Result<ModelInstance> {
    let (n, _) = lattice_edges(dims, periodic)?;
    let kind = ModelKind::Rfim { dims: dims.to_vec(), periodic, coupling };
    let base = rfim_base(&kind, n, &[]);
    let disorder = draw(key, 0, n);
    ModelInstance::assemble(n, kind, gamma, base, Arc::new(FeatureSet::sites(n)), disorder, Some(rfim_base))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn pspin_base(kind: &ModelKind, n: usize, g: &[f64]) -> BaseWeights {
    let ModelKind::Pspin { p, beta, h } = *kind else { unreachable!("pspin_base on {kind:?}") };
    let scale = beta * (factorial(p) / (2.0 * (n as f64).powi(p as i32 - 1))).sqrt();
    let mut terms: Vec<Interaction> = if beta == 0.0 {
        Vec::new()
    } else {
        combinations(n, p)
            .into_iter()
            .zip(g)
            .map(|(sites, g)| Interaction { sites, coupling: scale * g })
            .collect()
    };
    terms.extend(field_terms(n, h));
    BaseWeights::from_terms(terms)
}

/// Derrida's p-spin model under a random external field:
/// `-H_N = beta sqrt(p!/(2 N^(p-1))) sum_{i_1<..<i_p} g s..s + h sum s_i + gamma sum g_i s_i`.
///
/// For `p = 2` this coincides with [`build_sk`].
pub fn build_pspin(
    n: usize,
    p: usize,
    beta: f64,
    gamma: f64,
    h: f64,
    master_seed: u64,
    sample_index: u64,
) -> Result<ModelInstance> {
    build_pspin_keyed(n, p, beta, gamma, h, DisorderKey::new(master_seed, sample_index))
}

pub fn build_pspin_keyed(n: usize, p: usize, beta: f64, gamma: f64, h: f64, key: DisorderKey) -> Result<ModelInstance> {
    if n == 0 {
        return Err(Error::InvalidModel("N must be positive".into()));
    }
    if p < 2 || p > n {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in 2..={n}")));
    }
    let kind = ModelKind::Pspin { p, beta, h };
    let disorder = draw(key, combinations(n, p).len(), n);
    let base = pspin_base(&kind, n, &disorder.base);
    ModelInstance::assemble(n, kind, gamma, base, Arc::new(FeatureSet::sites(n)), disorder, Some(pspin_base))
}

/// Any base measure and feature set. Features are validated against `[-1, 1]`
/// on probe configurations before the instance is returned.
pub fn build_generalized(
    n: usize,
    base: BaseWeights,
    features: FeatureSet,
    gamma: f64,
    master_seed: u64,
    sample_index: u64,
) -> Result<ModelInstance> {
    build_generalized_keyed(n, base, Arc::new(features), gamma, DisorderKey::new(master_seed, sample_index))
}

pub fn build_generalized_keyed(
    n: usize,
    base: BaseWeights,
    features: Arc<FeatureSet>,
    gamma: f64,
    key: DisorderKey,
) -> Result<ModelInstance> {
    if features.n() != n {
        return Err(Error::InvalidModel(format!("feature set is over {} sites but N = {n}", features.n())));
    }
    features.validate(key.master_seed)?;
    let disorder = draw(key, 0, features.len());
    ModelInstance::assemble(n, ModelKind::Generalized, gamma, base, features, disorder, None)
}
