use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::features::{probe_configurations, ConfigFn, Feature, FeatureSet};
use crate::error::{Error, Result};
use crate::spin::SpinConfiguration;

/// A product of spins with a real coefficient, one term of `log mu_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    pub sites: Vec<usize>,
    pub coupling: f64,
}

/// Unnormalized base log-weights `log mu_N(sigma)`.
///
/// A sum of spin-product interactions, a constant, and optionally an arbitrary
/// function. The uniform measure is the empty sum.
#[derive(Clone, Default)]
pub struct BaseWeights {
    terms: Vec<Interaction>,
    constant: f64,
    custom: Option<ConfigFn>,
}

impl BaseWeights {
    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<Interaction>) -> Self {
        Self { terms, ..Self::default() }
    }

    /// Adds an arbitrary log-weight. Single-flip updates re-evaluate it in full.
    pub fn with_custom<F>(mut self, f: F) -> Self
    where
        F: Fn(&SpinConfiguration) -> f64 + Send + Sync + 'static,
    {
        self.custom = Some(Arc::new(f));
        self
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn terms(&self) -> &[Interaction] {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn custom(&self) -> Option<&ConfigFn> {
        self.custom.as_ref()
    }

    pub fn is_uniform(&self) -> bool {
        self.terms.is_empty() && self.custom.is_none()
    }

    pub fn eval(&self, config: &SpinConfiguration) -> f64 {
        let mut total = self.constant;
        for term in &self.terms {
            total += term.coupling * config.product(&term.sites);
        }
        if let Some(custom) = &self.custom {
            total += custom(config);
        }
        total
    }
}

impl fmt::Debug for BaseWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseWeights")
            .field("terms", &self.terms.len())
            .field("constant", &self.constant)
            .field("custom", &self.custom.is_some())
            .finish()
    }
}

/// Which builder produced an instance, with the parameters that are not disorder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelKind {
    Sk { beta: f64, h: f64 },
    Ea { dims: Vec<usize>, periodic: bool },
    Rfim { dims: Vec<usize>, periodic: bool, coupling: f64 },
    Pspin { p: usize, beta: f64, h: f64 },
    Generalized,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Sk { .. } => "sk",
            ModelKind::Ea { .. } => "ea",
            ModelKind::Rfim { .. } => "rfim",
            ModelKind::Pspin { .. } => "pspin",
            ModelKind::Generalized => "generalized",
        }
    }
}

/// Where a disorder realization came from.
///
/// Base and perturbation gaussians use separate sample indices so that one
/// layer can be held fixed while the other is resampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DisorderKey {
    pub master_seed: u64,
    pub base_index: u64,
    pub perturbation_index: u64,
}

impl DisorderKey {
    pub fn new(master_seed: u64, sample_index: u64) -> Self {
        Self { master_seed, base_index: sample_index, perturbation_index: sample_index }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisorderRealization {
    pub key: DisorderKey,
    /// Gaussians inside `mu_N`, in the builder's documented order.
    pub base: Vec<f64>,
    /// `g_alpha`, one per feature, in feature order.
    pub perturbation: Vec<f64>,
}

/// A fully specified disordered model:
/// `G_N(sigma) ∝ mu_N(sigma) exp(gamma * sum_alpha g_alpha f_alpha(sigma))`.
///
/// Immutable after construction; the `with_*` methods return modified copies.
#[derive(Clone)]
pub struct ModelInstance {
    n: usize,
    kind: ModelKind,
    gamma: f64,
    base: BaseWeights,
    base_incidence: Vec<Vec<usize>>,
    features: Arc<FeatureSet>,
    disorder: DisorderRealization,
    rebuild_base: Option<fn(&ModelKind, usize, &[f64]) -> BaseWeights>,
}

impl fmt::Debug for ModelInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelInstance")
            .field("n", &self.n)
            .field("kind", &self.kind)
            .field("gamma", &self.gamma)
            .field("features", &self.features.len())
            .field("key", &self.disorder.key)
            .finish()
    }
}

impl ModelInstance {
    pub(crate) fn assemble(
        n: usize,
        kind: ModelKind,
        gamma: f64,
        base: BaseWeights,
        features: Arc<FeatureSet>,
        disorder: DisorderRealization,
        rebuild_base: Option<fn(&ModelKind, usize, &[f64]) -> BaseWeights>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("N must be positive".into()));
        }
        if features.n() != n {
            return Err(Error::InvalidModel(format!(
                "feature set is over {} sites but N = {n}",
                features.n()
            )));
        }
        if disorder.perturbation.len() != features.len() {
            return Err(Error::InvalidModel(format!(
                "{} perturbation gaussians for {} features",
                disorder.perturbation.len(),
                features.len()
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma = {gamma} is not finite")));
        }
        let mut base_incidence = vec![Vec::new(); n];
        for (t, term) in base.terms.iter().enumerate() {
            for &site in &term.sites {
                if site >= n {
                    return Err(Error::SiteOutOfRange { site, n });
                }
                base_incidence[site].push(t);
            }
        }
        Ok(Self { n, kind, gamma, base, base_incidence, features, disorder, rebuild_base })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn base(&self) -> &BaseWeights {
        &self.base
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn disorder(&self) -> &DisorderRealization {
        &self.disorder
    }

    /// `g_alpha` in feature order.
    pub fn perturbation(&self) -> &[f64] {
        &self.disorder.perturbation
    }

    /// Base interaction terms touching `site`.
    pub fn base_incident(&self, site: usize) -> &[usize] {
        &self.base_incidence[site]
    }

    /// Same disorder, different `gamma`.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        let mut out = self.clone();
        out.gamma = gamma;
        out
    }

    /// Replaces the perturbation field `g_alpha`.
    pub fn with_perturbation(&self, field: Vec<f64>) -> Result<Self> {
        if field.len() != self.features.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} features",
                field.len(),
                self.features.len()
            )));
        }
        let mut out = self.clone();
        out.disorder.perturbation = field;
        Ok(out)
    }

    /// Replaces a single `g_alpha`.
    pub fn with_perturbation_at(&self, alpha: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.disorder.perturbation[alpha] = value;
        out
    }

    /// Test hook: every gaussian, base and perturbation, set to `value`.
    pub fn with_uniform_disorder(&self, value: f64) -> Self {
        let mut out = self.clone();
        out.disorder.perturbation.iter_mut().for_each(|g| *g = value);
        out.disorder.base.iter_mut().for_each(|g| *g = value);
        if let Some(rebuild) = self.rebuild_base {
            out.base = rebuild(&out.kind, out.n, &out.disorder.base);
        }
        out
    }

    /// Adds `shift` to every energy.
    pub fn with_energy_shift(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.base.constant -= shift;
        out
    }

    fn check_len(&self, config: &SpinConfiguration) -> Result<()> {
        if config.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: config.len() });
        }
        Ok(())
    }

    /// `log mu_N(sigma)`, unnormalized.
    pub fn base_log_weight(&self, config: &SpinConfiguration) -> f64 {
        self.base.eval(config)
    }

    /// `sum_alpha g_alpha f_alpha(sigma)`.
    pub fn perturbation_field(&self, config: &SpinConfiguration) -> f64 {
        self.features
            .iter()
            .zip(&self.disorder.perturbation)
            .map(|(f, g)| g * f.eval(config))
            .sum()
    }

    /// `log mu_N(sigma) + gamma * sum_alpha g_alpha f_alpha(sigma)`.
    pub fn log_weight(&self, config: &SpinConfiguration) -> f64 {
        self.base_log_weight(config) + self.gamma * self.perturbation_field(config)
    }

    /// `H_N(sigma)`, the negated total log-weight, so that `G_N(sigma) ∝ exp(-energy)`.
    pub fn energy(&self, config: &SpinConfiguration) -> Result<f64> {
        self.check_len(config)?;
        Ok(-self.log_weight(config))
    }

    /// `H_N(flip(sigma, site)) - H_N(sigma)`, touching only terms incident to `site`.
    pub fn energy_delta(&self, config: &SpinConfiguration, site: usize) -> Result<f64> {
        self.check_len(config)?;
        if site >= self.n {
            return Err(Error::SiteOutOfRange { site, n: self.n });
        }
        Ok(self.energy_delta_unchecked(config, site))
    }

    #[inline]
    pub(crate) fn energy_delta_unchecked(&self, config: &SpinConfiguration, site: usize) -> f64 {
        let mut flipped: Option<SpinConfiguration> = None;
        let mut delta_log_weight = 0.0;
        for &t in &self.base_incidence[site] {
            let term = &self.base.terms[t];
            delta_log_weight -= 2.0 * term.coupling * config.product(&term.sites);
        }
        if let Some(custom) = &self.base.custom {
            let f = flipped.get_or_insert_with(|| config.flipped(site));
            delta_log_weight += custom(f) - custom(config);
        }
        let mut delta_field = 0.0;
        for &alpha in self.features.incident(site) {
            let g = self.disorder.perturbation[alpha];
            match self.features.get(alpha) {
                Feature::Monomial(sites) => delta_field -= 2.0 * g * config.product(sites),
                Feature::Custom { eval, .. } => {
                    let f = flipped.get_or_insert_with(|| config.flipped(site));
                    delta_field += g * (eval(f) - eval(config));
                }
            }
        }
        -(delta_log_weight + self.gamma * delta_field)
    }

    /// `(f_alpha(sigma))_alpha`.
    pub fn feature_values(&self, config: &SpinConfiguration) -> Vec<f64> {
        self.features.values(config)
    }

    /// `R_{1,1}(sigma) = (1/N) sum_alpha f_alpha(sigma)^2`.
    pub fn self_overlap(&self, config: &SpinConfiguration) -> f64 {
        self.features.iter().map(|f| f.eval(config).powi(2)).sum::<f64>() / self.n as f64
    }

    /// Verifies that `R_{1,1}` is the same for every configuration and returns it.
    ///
    /// Probes all-plus, all-minus, alternating and 32 seeded random
    /// configurations. A spread above `tolerance` is an error, which callers
    /// treat as fatal for overlap-based analysis.
    pub fn self_overlap_constant(&self, tolerance: f64) -> Result<f64> {
        let values: Vec<f64> =
            probe_configurations(self.n, 32).iter().map(|c| self.self_overlap(c)).collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spread = hi - lo;
        if spread > tolerance {
            return Err(Error::SelfOverlapNotConstant { spread, tolerance });
        }
        Ok(values[0])
    }
}

/// Tolerance used when a caller does not supply one.
pub const SELF_OVERLAP_TOLERANCE: f64 = 1e-12;
