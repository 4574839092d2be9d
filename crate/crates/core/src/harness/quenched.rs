use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SampleFactory;
use crate::error::{Error, Result};
use crate::gibbs::{self, GibbsEnsemble};
use crate::model::{DisorderMode, ModelFamily, ModelInstance, ModelSpec, Params};
use crate::observables::MIN_DISORDER_SAMPLES;
use crate::stats::{mean_estimate, variance_estimate, Estimate};

/// A disorder average over i.i.d. samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchedEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub std_error: f64,
    pub n_samples: usize,
    /// Unbiased sample variance of the per-sample values.
    pub variance: f64,
    /// Standard error of `variance`.
    pub variance_std_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl QuenchedEstimate {
    pub fn from_values(values: Vec<f64>, keep: bool) -> Self {
        let e = mean_estimate(&values);
        let (variance, variance_std_error) = variance_with_error(&values);
        Self {
            mean: e.value,
            std_error: e.std_error,
            n_samples: values.len(),
            variance,
            variance_std_error,
            values: keep.then_some(values),
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.mean, self.std_error)
    }

    pub fn variance_estimate(&self) -> Estimate {
        Estimate::new(self.variance, self.variance_std_error)
    }
}

pub(crate) fn variance_with_error(values: &[f64]) -> (f64, f64) {
    let v = variance_estimate(values);
    (v.value, v.std_error)
}

pub(crate) fn require_samples(n_samples: usize) -> Result<()> {
    if n_samples < MIN_DISORDER_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "quenched averages need at least {MIN_DISORDER_SAMPLES} disorder samples, got {n_samples}"
        )));
    }
    Ok(())
}

/// Maps `f` over disorder samples `0..n` in parallel, returning results in sample order.
pub(crate) fn per_sample<F, T, G>(factory: &F, n_samples: usize, f: G) -> Result<Vec<T>>
where
    F: SampleFactory,
    T: Send,
    G: Fn(u64, ModelInstance) -> Result<T> + Sync,
{
    (0..n_samples as u64).into_par_iter().map(|s| f(s, factory(s)?)).collect()
}

/// Quenched free energy `p_N = E psi_N` with the spread of `psi_N`.
pub fn quenched_free_energy<F: SampleFactory>(factory: F, n_samples: usize) -> Result<QuenchedEstimate> {
    require_samples(n_samples)?;
    let values = per_sample(&factory, n_samples, |_, m| gibbs::free_energy_per_site(&m))?;
    Ok(QuenchedEstimate::from_values(values, true))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub mode: DisorderMode,
    pub features: usize,
    pub variance: Estimate,
    /// `Var(psi_N) N^2 / (gamma^2 |A_N|)`.
    pub ratio: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub rows: Vec<ConcentrationRow>,
    /// `max / min` of the ratio per mode, in `[perturbation, total]` order.
    pub spread: Vec<(DisorderMode, f64)>,
    /// Whether the ratio increases at every step of `N`, per mode.
    pub grows: Vec<(DisorderMode, bool)>,
    /// Set when the check does not apply.
    pub skipped: Option<String>,
}

impl ConcentrationReport {
    /// `max / min < band` for every mode.
    pub fn bounded(&self, band: f64) -> bool {
        self.skipped.is_none() && self.spread.iter().all(|(_, s)| *s < band)
    }
}

/// Normalized variance of `psi_N` across `n_list`, for both disorder modes.
///
/// No absolute constant is known, so the check reports the ratio and its spread.
pub fn concentration_check(
    family: &ModelFamily,
    params: Params,
    n_samples: usize,
    n_list: &[usize],
    master_seed: u64,
) -> Result<ConcentrationReport> {
    if params.gamma == 0.0 {
        return Ok(ConcentrationReport {
            rows: Vec::new(),
            spread: Vec::new(),
            grows: Vec::new(),
            skipped: Some("gamma = 0: the concentration bound is vacuous".into()),
        });
    }
    require_samples(n_samples)?;
    let mut rows = Vec::new();
    let mut spread = Vec::new();
    let mut grows = Vec::new();
    for mode in [DisorderMode::Perturbation, DisorderMode::Total] {
        let mut ratios = Vec::new();
        for &n in n_list {
            let spec = ModelSpec::new(family.clone(), n);
            let features = spec.build(params, mode.key(master_seed, 0))?.feature_count();
            let q = quenched_free_energy(spec.factory(params, master_seed, mode), n_samples)?;
            let scale = (n * n) as f64 / (params.gamma * params.gamma * features.max(1) as f64);
            let ratio = Estimate::new(q.variance * scale, q.variance_std_error * scale);
            ratios.push(ratio.value);
            rows.push(ConcentrationRow { n, mode, features, variance: q.variance_estimate(), ratio });
        }
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        spread.push((mode, if min > 0.0 { max / min } else { f64::INFINITY }));
        grows.push((mode, ratios.len() > 1 && ratios.windows(2).all(|w| w[1] > w[0])));
    }
    Ok(ConcentrationReport { rows, spread, grows, skipped: None })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofBoundRecord {
    /// `E<(H - <H>)^2>`.
    pub lhs: Estimate,
    /// `|A_N| sqrt(24 Var psi_N) / (N gamma^2) + 2 |A_N| / N^2`.
    pub rhs: Estimate,
    pub var_psi: Estimate,
    pub features: usize,
    pub holds: bool,
}

/// Compares the two sides of the final variance bound on the same disorder samples.
///
/// `holds` is `lhs <= rhs + 3 sigma` with the two errors combined in quadrature.
pub fn proof_bound_check<F: SampleFactory>(factory: F, n_samples: usize) -> Result<ProofBoundRecord> {
    require_samples(n_samples)?;
    let first = factory(0)?;
    let gamma = first.gamma();
    if gamma == 0.0 {
        return Err(Error::InvalidArgument("proof bound requires gamma != 0".into()));
    }
    let (n, features) = (first.n() as f64, first.feature_count());
    let pairs = per_sample(&factory, n_samples, |_, m| {
        let ens = GibbsEnsemble::new(m);
        let moments = ens.moments()?;
        Ok((moments.log_partition / n, moments.h_variance()))
    })?;
    let psi: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let var_h: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let lhs = mean_estimate(&var_h);
    let (var_psi, var_psi_se) = variance_with_error(&psi);
    let a = features as f64;
    let slope = a * 24f64.sqrt() / (n * gamma * gamma);
    let rhs_value = slope * var_psi.sqrt() + 2.0 * a / (n * n);
    let rhs_se = if var_psi > 0.0 { slope * var_psi_se / (2.0 * var_psi.sqrt()) } else { 0.0 };
    let rhs = Estimate::new(rhs_value, rhs_se);
    let tolerance = 3.0 * (lhs.std_error.powi(2) + rhs_se.powi(2)).sqrt();
    Ok(ProofBoundRecord {
        holds: lhs.value <= rhs.value + tolerance,
        lhs,
        rhs,
        var_psi: Estimate::new(var_psi, var_psi_se),
        features,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JensenRecord {
    pub nu_h: Estimate,
    /// Centred difference of the quenched free energy in `gamma`, same disorder at both points.
    pub p_prime: Estimate,
    /// `E|<H> - nu(H)|`.
    pub e_abs_gibbs_h_minus_nu_h: Estimate,
    pub holds: bool,
}

/// `|nu(H) - p_N'| <= E|<H> - nu(H)|` plus three standard errors of the paired difference.
pub fn jensen_consistency<F: SampleFactory>(factory: F, n_samples: usize, step: f64) -> Result<JensenRecord> {
    require_samples(n_samples)?;
    if step <= 0.0 {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    let rows = per_sample(&factory, n_samples, |_, m| {
        let g = m.gamma();
        let h = GibbsEnsemble::new(m.clone()).moments()?.h_mean;
        let up = gibbs::free_energy_per_site(&m.with_gamma(g + step))?;
        let down = gibbs::free_energy_per_site(&m.with_gamma(g - step))?;
        Ok((h, (up - down) / (2.0 * step)))
    })?;
    let h: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let d: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let nu_h = mean_estimate(&h);
    let p_prime = mean_estimate(&d);
    let e_abs = mean_estimate(&h.iter().map(|x| (x - nu_h.value).abs()).collect::<Vec<_>>());
    let paired = mean_estimate(&h.iter().zip(&d).map(|(a, b)| a - b).collect::<Vec<_>>());
    let holds = paired.value.abs() <= e_abs.value + 3.0 * paired.std_error.max(e_abs.std_error) + 1e-12;
    Ok(JensenRecord { nu_h, p_prime, e_abs_gibbs_h_minus_nu_h: e_abs, holds })
}
