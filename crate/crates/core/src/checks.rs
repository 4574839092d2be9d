//! Named checks and the experiment runner.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CheckConfig, ExperimentConfig};
use crate::error::{Error, Result};
use crate::gaussian::{check_polynomial, polynomial_battery, psi_variance_via_hermite, PSI_RELATIVE_TOLERANCE};
use crate::gibbs::{self, EngineMode, GibbsEnsemble, McmcSettings};
use crate::harness::{
    averaged_identity_scan, concentration_check, convexity_check, covariance_derivative_check, gamma_derivative_check,
    jensen_consistency, proof_bound_check, quenched_free_energy, uniform_grid, COVARIANCE_CONTRACT, COVARIANCE_STEP,
    DERIVATIVE_STEP,
};
use crate::model::{DisorderMode, ModelInstance, ModelSpec, Params};
use crate::observables::{
    extended_gg_diagnostic, gg_residual, overlap_histogram, self_averaging_report, OverlapFunctional, DEFAULT_BINS,
};
use crate::report::{ExperimentReport, ReportMetadata, ReportRow, Verdict};
use crate::stats::Estimate;

/// Caveat attached to every report that contains trend evidence.
pub const DIFFERENTIABILITY_NOTE: &str = "The identities hold for almost every (beta, gamma, h). A finite-N run cannot certify that a chosen point is a differentiability point of the limiting free energy; trends are evidence, not verification.";

macro_rules! check_kinds {
    ($($variant:ident => $name:literal, $contract:literal, $doc:literal;)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        pub enum CheckKind {
            $($variant,)*
        }

        impl CheckKind {
            pub const ALL: &'static [CheckKind] = &[$(CheckKind::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(CheckKind::$variant => $name,)*
                }
            }

            /// Empty when the check reports without a pass/fail contract.
            pub fn contract(self) -> &'static str {
                match self {
                    $(CheckKind::$variant => $contract,)*
                }
            }

            pub fn description(self) -> &'static str {
                match self {
                    $(CheckKind::$variant => $doc,)*
                }
            }
        }
    };
}

check_kinds! {
    GgResidualF1 => "gg_residual_f1", "|estimate| <= 3 std_error",
        "Ghirlanda-Guerra residual with f = 1; vanishes identically by exchangeability";
    GgResidual => "gg_residual", "",
        "Ghirlanda-Guerra residual for a named functional (options: functional, n)";
    ProductMeasure => "product_measure", "psi and <sigma> to 1e-12; nu(R12) to 1e-10; residuals within 3 std_error of closed forms",
        "beta = gamma = 0 closed forms: psi = log 2cosh h, <sigma_i> = tanh h, nu(R12) = tanh^2 h";
    OracleEquivalence => "oracle_equivalence", "relative error <= 1e-9",
        "Gray-code engine against direct per-configuration recomputation (option: samples = instances)";
    GammaDerivative => "gamma_derivative", "abs_error <= max(1e-6, step^2 M) for every sample",
        "<H> against a centred difference of psi_N in gamma (options: samples, step)";
    CovarianceDerivative => "covariance_derivative", "max discrepancy <= 1e-5",
        "Gibbs covariance of features against mixed second differences of psi_N (options: pairs, step, samples)";
    Convexity => "convexity", "second differences >= -1e-9 and chord bounds hold",
        "Convexity of gamma -> psi_N on a grid (options: interval, grid_points, samples)";
    Concentration => "concentration", "max/min of the normalized ratio < band (default 10) in both disorder modes",
        "Var(psi_N) N^2 / (gamma^2 |A_N|) across N, perturbation-only and total disorder";
    HermiteIdentity => "hermite_identity", "psi truncation within 1% of quadrature, monotone; polynomials exact to 1e-8",
        "Hermite variance series for psi_N of a tiny instance and a random polynomial battery (options: k, mc_samples, samples)";
    ProofBound => "proof_bound", "lhs <= rhs + 3 std_error",
        "E<(H - <H>)^2> against |A| sqrt(24 Var psi) / (N gamma^2) + 2|A| / N^2 (option: mode, default perturbation)";
    GgTrend => "gg_trend", "",
        "|residual| and nu(|H - nu(H)|) across N, with summary rows (evidence only)";
    AveragedScan => "averaged_scan", "integral at the largest N <= integral at the smallest N + combined std_error",
        "Trapezoid integral of |residual| over a gamma interval, per N (options: interval, grid_points, functional, n)";
    SamplerAgreement => "sampler_agreement", "total variation < 0.05",
        "Overlap histograms of the exact sampler and Glauber dynamics (options: pairs, bins, burn_in, thin)";
    SelfAveraging => "self_averaging", "",
        "nu(|H - nu(H)|) and its decomposition into disorder and thermal parts";
    QuenchedFreeEnergy => "quenched_free_energy", "",
        "p_N = E psi_N with the sample variance of psi_N";
    Jensen => "jensen", "|nu(H) - p_N'| <= E|<H> - nu(H)| + 3 std_error",
        "Quenched derivative identity on paired disorder samples (option: step)";
    ExtendedGg => "extended_gg", "",
        "Binned conditional law of R_{1,n+1} given R_n against the mixture law (finite-N diagnostic)";
}

impl CheckKind {
    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Unknown { kind: "check", name: name.to_string() })
    }

    /// Checks that compare values across the whole `N` list.
    pub fn spans_sizes(self) -> bool {
        matches!(self, CheckKind::Concentration | CheckKind::GgTrend | CheckKind::AveragedScan)
    }

    pub(crate) fn validate(self, c: &CheckConfig) -> Result<()> {
        let functional = c.functional.as_deref().unwrap_or("r12");
        if !crate::observables::FUNCTIONAL_NAMES.contains(&functional) {
            return Err(Error::Unknown { kind: "functional", name: functional.to_string() });
        }
        let arity = c.n.unwrap_or(2);
        if arity < 2 {
            return Err(Error::InvalidArgument(format!("n = {arity} must be at least 2")));
        }
        match self {
            CheckKind::ProductMeasure => {
                if !matches!(c.model.as_str(), "sk" | "pspin") {
                    return Err(Error::InvalidArgument("product_measure needs model sk or pspin".into()));
                }
                if c.points.iter().any(|p| p.beta != 0.0 || p.gamma != 0.0) {
                    return Err(Error::InvalidArgument("product_measure needs beta = gamma = 0".into()));
                }
            }
            CheckKind::CovarianceDerivative | CheckKind::ProofBound | CheckKind::Concentration => {
                if self != CheckKind::Concentration && c.points.iter().any(|p| p.gamma == 0.0) {
                    return Err(Error::InvalidArgument(format!("{} needs gamma != 0", self.name())));
                }
            }
            CheckKind::HermiteIdentity => {
                if c.n_list.iter().any(|&n| n > crate::gaussian::PSI_MAX_N) {
                    return Err(Error::InvalidArgument(format!("N must be at most {}", crate::gaussian::PSI_MAX_N)));
                }
            }
            CheckKind::ExtendedGg => {
                if !(2..=3).contains(&arity) {
                    return Err(Error::InvalidArgument("extended_gg supports n = 2 or 3".into()));
                }
            }
            CheckKind::AveragedScan | CheckKind::GgTrend if c.n_list.len() < 2 => {
                return Err(Error::InvalidArgument(format!("{} needs at least two N values", self.name())));
            }
            _ => {}
        }
        if !self.uses_sampling() {
            for &n in &c.n_list {
                if n > gibbs::N_MAX_EXACT {
                    return Err(Error::TooLargeForExact { n, limit: gibbs::N_MAX_EXACT });
                }
            }
        }
        Ok(())
    }

    /// Checks that fall back to MCMC above the exact-enumeration limit.
    fn uses_sampling(self) -> bool {
        matches!(
            self,
            CheckKind::GgResidualF1 | CheckKind::GgResidual | CheckKind::SelfAveraging | CheckKind::ExtendedGg
        )
    }
}

/// One report row and the full record behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutput {
    pub row: ReportRow,
    pub detail: Value,
}

struct Cell<'a> {
    config: &'a CheckConfig,
    kind: CheckKind,
    spec: ModelSpec,
    params: Params,
    seed: u64,
}

impl Cell<'_> {
    fn row(&self, arity: Option<usize>, functional: &str, estimate: Estimate, pass: Option<bool>) -> ReportRow {
        let contract = if pass.is_some() { self.kind.contract() } else { "" };
        ReportRow {
            check: self.kind.name().into(),
            model: self.config.model.clone(),
            size: Some(self.spec.n),
            beta: self.params.beta,
            gamma: self.params.gamma,
            h: self.params.h,
            n: arity,
            functional: functional.into(),
            estimate: estimate.value,
            std_error: estimate.std_error,
            contract: contract.into(),
            pass: pass.map_or(Verdict::NotApplicable, Verdict::from_bool),
        }
    }

    fn output<T: Serialize>(
        &self,
        arity: Option<usize>,
        functional: &str,
        estimate: Estimate,
        pass: Option<bool>,
        detail: &T,
    ) -> Result<CheckOutput> {
        Ok(CheckOutput { row: self.row(arity, functional, estimate, pass), detail: serde_json::to_value(detail)? })
    }

    fn mode(&self, default: DisorderMode) -> DisorderMode {
        self.config.mode.unwrap_or(default)
    }

    fn samples(&self, default: usize) -> usize {
        self.config.samples.unwrap_or(default)
    }

    fn draws(&self, default: usize) -> usize {
        self.config.draws.unwrap_or(default)
    }

    fn arity(&self) -> usize {
        self.config.n.unwrap_or(2)
    }

    fn functional_name(&self, default: &str) -> String {
        self.config.functional.clone().unwrap_or_else(|| default.to_string())
    }

    fn instance(&self, index: u64, mode: DisorderMode) -> Result<ModelInstance> {
        self.spec.sample(self.params, self.seed, index, mode)
    }

    fn functional(&self, name: &str, arity: usize) -> Result<OverlapFunctional> {
        let r11 = self.instance(0, DisorderMode::Total)?.self_overlap_constant(1e-12)?;
        OverlapFunctional::by_name(name, arity, r11)
    }

    fn residual(&self, name: &str, samples: usize, draws: usize) -> Result<crate::observables::ResidualEstimate> {
        let arity = self.arity();
        let f = self.functional(name, arity)?;
        let factory = self.spec.factory(self.params, self.seed, self.mode(DisorderMode::Total));
        gg_residual(factory, &f, samples, draws, self.seed)
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn run_cell(cell: &Cell<'_>) -> Result<Vec<CheckOutput>> {
    let n = cell.spec.n;
    let p = cell.params;
    Ok(match cell.kind {
        CheckKind::GgResidualF1 => {
            let r = cell.residual("one", cell.samples(256), cell.draws(512))?;
            let e = Estimate::new(r.delta_hat, r.std_error);
            vec![cell.output(Some(r.arity), "one", e, Some(r.delta_hat.abs() <= 3.0 * r.std_error), &r)?]
        }
        CheckKind::GgResidual => {
            let name = cell.functional_name("r12");
            let r = cell.residual(&name, cell.samples(256), cell.draws(512))?;
            vec![cell.output(Some(r.arity), &name, Estimate::new(r.delta_hat, r.std_error), None, &r)?]
        }
        CheckKind::ProductMeasure => {
            let m = cell.instance(0, DisorderMode::Total)?;
            let ens = GibbsEnsemble::new(m);
            let moments = ens.moments()?;
            let psi = moments.log_partition / n as f64;
            let t = p.h.tanh();
            let psi_exact = (2.0 * p.h.cosh()).ln();
            let psi_err = (psi - psi_exact).abs();
            let m_err = moments.feature_means.iter().fold(0.0f64, |a, x| a.max((x - t).abs()));
            let nu_err = (moments.pair_overlap(n) - t * t).abs();
            let samples = cell.samples(256);
            let draws = cell.draws(512);
            let f1 = cell.residual("one", samples, draws)?;
            let f = OverlapFunctional::by_name("r12", 2, 1.0)?;
            let r12 = gg_residual(cell.spec.factory(p, cell.seed, DisorderMode::Total), &f, samples, draws, cell.seed)?;
            let r12_exact = -(1.0 - t * t).powi(2) / (2.0 * n as f64);
            let pass = psi_err <= 1e-12
                && m_err <= 1e-12
                && nu_err <= 1e-10
                && f1.delta_hat.abs() <= 3.0 * f1.std_error
                && (r12.delta_hat - r12_exact).abs() <= 3.0 * r12.std_error;
            let detail = json!({
                "psi": psi, "psi_closed_form": psi_exact, "psi_error": psi_err,
                "max_magnetization_error": m_err,
                "nu_r12": moments.pair_overlap(n), "nu_r12_closed_form": t * t, "nu_r12_error": nu_err,
                "residual_one": f1, "residual_r12": r12, "residual_r12_closed_form": r12_exact,
            });
            let worst = psi_err.max(m_err).max(nu_err);
            vec![cell.output(None, "max_closed_form_error", Estimate::exact(worst), Some(pass), &detail)?]
        }
        CheckKind::OracleEquivalence => {
            let count = cell.samples(20);
            let errors = (0..count as u64)
                .into_par_iter()
                .map(|s| {
                    let m = cell.instance(s, DisorderMode::Total)?;
                    let fast = gibbs::exact_moments(&m)?;
                    let slow = gibbs::reference_moments(&m)?;
                    let z = (fast.log_partition - slow.log_partition).abs() / slow.log_partition.abs().max(f64::MIN_POSITIVE);
                    let f = fast.feature_means.iter().zip(&slow.feature_means).fold(0.0f64, |a, (x, y)| a.max(relative(*x, *y)));
                    Ok(z.max(f))
                })
                .collect::<Result<Vec<f64>>>()?;
            let worst = errors.iter().copied().fold(0.0, f64::max);
            let detail = json!({ "instances": count, "relative_errors": errors });
            vec![cell.output(None, "max_relative_error", Estimate::exact(worst), Some(worst <= 1e-9), &detail)?]
        }
        CheckKind::GammaDerivative => {
            let step = cell.config.step.unwrap_or(DERIVATIVE_STEP);
            let records = (0..cell.samples(10) as u64)
                .into_par_iter()
                .map(|s| gamma_derivative_check(&cell.instance(s, DisorderMode::Total)?, step))
                .collect::<Result<Vec<_>>>()?;
            let worst = records.iter().map(|r| r.abs_error).fold(0.0, f64::max);
            let pass = records.iter().all(|r| r.pass);
            vec![cell.output(None, "max_abs_error", Estimate::exact(worst), Some(pass), &records)?]
        }
        CheckKind::CovarianceDerivative => {
            let step = cell.config.step.unwrap_or(COVARIANCE_STEP);
            let pairs = cell.config.pairs.unwrap_or(20);
            let records = (0..cell.samples(1) as u64)
                .into_par_iter()
                .map(|s| covariance_derivative_check(&cell.instance(s, DisorderMode::Total)?, pairs, step, cell.seed ^ s))
                .collect::<Result<Vec<_>>>()?;
            let worst = records.iter().map(|r| r.max_discrepancy).fold(0.0, f64::max);
            let detail = json!({ "records": records, "contract": COVARIANCE_CONTRACT });
            vec![cell.output(None, "max_discrepancy", Estimate::exact(worst), Some(worst <= COVARIANCE_CONTRACT), &detail)?]
        }
        CheckKind::Convexity => {
            let (lo, hi) = cell.config.interval.unwrap_or((-1.0, 1.0));
            let grid = uniform_grid(lo, hi, cell.config.grid_points.unwrap_or(21));
            let records = (0..cell.samples(5) as u64)
                .into_par_iter()
                .map(|s| convexity_check(&cell.instance(s, DisorderMode::Total)?, &grid))
                .collect::<Result<Vec<_>>>()?;
            let worst = records.iter().map(|r| r.worst_second_difference).fold(f64::INFINITY, f64::min);
            let pass = records.iter().all(|r| r.holds);
            vec![cell.output(None, "min_second_difference", Estimate::exact(worst), Some(pass), &records)?]
        }
        CheckKind::HermiteIdentity => {
            let m = cell.instance(0, DisorderMode::Total)?;
            let r = psi_variance_via_hermite(&m, cell.config.k.unwrap_or(8), cell.config.mc_samples.unwrap_or(20_000), cell.seed)?;
            let polys = polynomial_battery(cell.samples(32), cell.seed)
                .iter()
                .map(check_polynomial)
                .collect::<Result<Vec<_>>>()?;
            let gap = if r.quadrature_variance > 0.0 {
                (r.truncated_sum - r.quadrature_variance).abs() / r.quadrature_variance
            } else {
                r.truncated_sum.abs()
            };
            let pass = gap <= PSI_RELATIVE_TOLERANCE && r.monotone && polys.iter().all(|c| c.pass);
            let detail = json!({ "psi": r, "polynomials": polys });
            vec![cell.output(None, "psi_relative_gap", Estimate::exact(gap), Some(pass), &detail)?]
        }
        CheckKind::ProofBound => {
            let factory = cell.spec.factory(p, cell.seed, cell.mode(DisorderMode::Perturbation));
            let r = proof_bound_check(factory, cell.samples(256))?;
            vec![cell.output(None, "lhs", r.lhs, Some(r.holds), &r)?]
        }
        CheckKind::SamplerAgreement => {
            let m = cell.instance(0, DisorderMode::Total)?;
            let pairs = cell.config.pairs.unwrap_or(20_000);
            let bins = cell.config.bins.unwrap_or(DEFAULT_BINS);
            let defaults = McmcSettings::default();
            let settings = McmcSettings {
                burn_in: cell.config.burn_in.unwrap_or(defaults.burn_in),
                thin: cell.config.thin.unwrap_or(defaults.thin),
            };
            let exact = GibbsEnsemble::with_mode(m.clone(), EngineMode::Exact)?;
            let mcmc = GibbsEnsemble::with_mode(m, EngineMode::Mcmc)?.with_mcmc_settings(settings);
            let a = overlap_histogram(&exact, pairs, bins, cell.seed)?;
            let b = overlap_histogram(&mcmc, pairs, bins, cell.seed.wrapping_add(1))?;
            let tv = a.total_variation(&b)?;
            let detail = json!({ "pairs": pairs, "bins": bins, "mcmc": settings, "exact": a.probabilities(), "glauber": b.probabilities() });
            vec![cell.output(None, "total_variation", Estimate::exact(tv), Some(tv < 0.05), &detail)?]
        }
        CheckKind::SelfAveraging => {
            let factory = cell.spec.factory(p, cell.seed, cell.mode(DisorderMode::Total));
            let r = self_averaging_report(factory, cell.samples(256), cell.draws(512), cell.seed)?;
            vec![cell.output(None, "nu_abs_h_minus_nu_h", r.nu_abs_h_minus_nu_h, None, &r)?]
        }
        CheckKind::QuenchedFreeEnergy => {
            let factory = cell.spec.factory(p, cell.seed, cell.mode(DisorderMode::Total));
            let mut q = quenched_free_energy(factory, cell.samples(256))?;
            q.values = None;
            vec![cell.output(None, "p_N", q.estimate(), None, &q)?]
        }
        CheckKind::Jensen => {
            let factory = cell.spec.factory(p, cell.seed, cell.mode(DisorderMode::Total));
            let r = jensen_consistency(factory, cell.samples(256), cell.config.step.unwrap_or(DERIVATIVE_STEP))?;
            let gap = Estimate::new((r.nu_h.value - r.p_prime.value).abs(), r.nu_h.std_error.hypot(r.p_prime.std_error));
            vec![cell.output(None, "abs_nu_h_minus_p_prime", gap, Some(r.holds), &r)?]
        }
        CheckKind::ExtendedGg => {
            let arity = cell.arity();
            let factory = cell.spec.factory(p, cell.seed, cell.mode(DisorderMode::Total));
            let t = extended_gg_diagnostic(
                factory,
                arity,
                cell.samples(64),
                cell.draws(512),
                cell.config.bins.unwrap_or(11),
                cell.seed,
            )?;
            vec![cell.output(Some(arity), "summary_tv", Estimate::exact(t.summary_tv), None, &t)?]
        }
        CheckKind::Concentration | CheckKind::GgTrend | CheckKind::AveragedScan => {
            unreachable!("{} spans sizes", cell.kind.name())
        }
    })
}

fn summary_row(config: &CheckConfig, kind: CheckKind, params: Params, arity: Option<usize>, label: &str, estimate: Estimate, pass: Option<bool>) -> ReportRow {
    ReportRow {
        check: kind.name().into(),
        model: config.model.clone(),
        size: None,
        beta: params.beta,
        gamma: params.gamma,
        h: params.h,
        n: arity,
        functional: label.into(),
        estimate: estimate.value,
        std_error: estimate.std_error,
        contract: if pass.is_some() { kind.contract().into() } else { String::new() },
        pass: pass.map_or(Verdict::NotApplicable, Verdict::from_bool),
    }
}

/// Rows of a check that compares the whole `N` list at one parameter point.
fn run_sequence(config: &CheckConfig, kind: CheckKind, params: Params, seed: u64) -> Result<Vec<CheckOutput>> {
    let family = config.family()?;
    let cells: Vec<Cell<'_>> = config
        .n_list
        .iter()
        .map(|&n| Cell { config, kind, spec: ModelSpec::new(family.clone(), n), params, seed })
        .collect();
    let mut out = Vec::new();
    match kind {
        CheckKind::Concentration => {
            let band = config.band.unwrap_or(10.0);
            let r = concentration_check(&family, params, config.samples.unwrap_or(512), &config.n_list, seed)?;
            if let Some(reason) = &r.skipped {
                let row = summary_row(config, kind, params, None, "skipped", Estimate::exact(0.0), None);
                out.push(CheckOutput { row, detail: json!({ "skipped": reason }) });
                return Ok(out);
            }
            for row in &r.rows {
                let cell = cells.iter().find(|c| c.spec.n == row.n).expect("row for a configured N");
                out.push(cell.output(None, &format!("ratio:{}", row.mode.name()), row.ratio, None, row)?);
            }
            let spread = r.spread.iter().map(|s| s.1).fold(0.0, f64::max);
            let row = summary_row(config, kind, params, None, "max_spread", Estimate::exact(spread), Some(r.bounded(band)));
            out.push(CheckOutput { row, detail: json!({ "band": band, "spread": r.spread, "grows": r.grows }) });
        }
        CheckKind::GgTrend => {
            let name = config.functional.clone().unwrap_or_else(|| "r12".into());
            let (samples, draws) = (config.samples.unwrap_or(256), config.draws.unwrap_or(512));
            let mut deltas = Vec::new();
            let mut spreads = Vec::new();
            for cell in &cells {
                let r = cell.residual(&name, samples, draws)?;
                let abs = Estimate::new(r.delta_hat.abs(), r.std_error);
                out.push(cell.output(Some(r.arity), &format!("abs_delta:{name}"), abs, None, &r)?);
                deltas.push(abs);
            }
            for cell in &cells {
                let factory = cell.spec.factory(params, seed, cell.mode(DisorderMode::Total));
                let s = self_averaging_report(factory, samples, draws, seed)?;
                out.push(cell.output(None, "nu_abs_h_minus_nu_h", s.nu_abs_h_minus_nu_h, None, &s)?);
                spreads.push(s.nu_abs_h_minus_nu_h);
            }
            let violations = deltas
                .windows(2)
                .filter(|w| w[1].value > w[0].value + 2.0 * w[0].std_error.hypot(w[1].std_error))
                .count();
            let arity = Some(config.n.unwrap_or(2));
            let row = summary_row(config, kind, params, arity, &format!("abs_delta:{name}:steps_increasing_beyond_2se"), Estimate::exact(violations as f64), None);
            out.push(CheckOutput { row, detail: json!({ "non_increasing": violations == 0, "note": DIFFERENTIABILITY_NOTE }) });
            let (first, last) = (spreads[0], spreads[spreads.len() - 1]);
            let ratio = first.value / last.value;
            let ratio_se = ratio * (first.std_error / first.value).hypot(last.std_error / last.value);
            let row = summary_row(config, kind, params, None, "nu_abs_h_minus_nu_h:first_over_last", Estimate::new(ratio, ratio_se), None);
            out.push(CheckOutput { row, detail: json!({ "decreases_by_1_5": ratio >= 1.5, "note": DIFFERENTIABILITY_NOTE }) });
        }
        CheckKind::AveragedScan => {
            let name = config.functional.clone().unwrap_or_else(|| "r12".into());
            let arity = config.n.unwrap_or(2);
            let interval = config.interval.unwrap_or((0.2, 1.0));
            let grid_points = config.grid_points.unwrap_or(5);
            let mode = config.mode.unwrap_or(DisorderMode::Total);
            let mut integrals = Vec::new();
            for cell in &cells {
                let f = cell.functional(&name, arity)?;
                let spec = &cell.spec;
                let r = averaged_identity_scan(
                    |g| spec.factory(params.with_gamma(g), seed, mode),
                    &f,
                    interval,
                    grid_points,
                    config.samples.unwrap_or(128),
                    config.draws.unwrap_or(256),
                    seed,
                )?;
                out.push(cell.output(Some(arity), &format!("integral:{name}"), r.integral, None, &r)?);
                integrals.push(r.integral);
            }
            let (first, last) = (integrals[0], integrals[integrals.len() - 1]);
            let diff = Estimate::new(last.value - first.value, first.std_error.hypot(last.std_error));
            let row = summary_row(config, kind, params, Some(arity), &format!("integral:{name}:last_minus_first"), diff, Some(diff.value <= diff.std_error));
            out.push(CheckOutput { row, detail: json!({ "interval": interval, "grid_points": grid_points, "note": DIFFERENTIABILITY_NOTE }) });
        }
        _ => unreachable!(),
    }
    Ok(out)
}

/// All rows of one `[[check]]` table, ordered by parameter point, then `N`.
pub fn run_check(config: &CheckConfig, seed: u64) -> Result<Vec<CheckOutput>> {
    let kind = config.kind()?;
    let family = config.family()?;
    if kind.spans_sizes() {
        let parts = config
            .points
            .par_iter()
            .map(|&params| run_sequence(config, kind, params, seed))
            .collect::<Result<Vec<_>>>()?;
        return Ok(parts.into_iter().flatten().collect());
    }
    let cells: Vec<Cell<'_>> = config
        .points
        .iter()
        .flat_map(|&params| {
            let family = family.clone();
            config.n_list.iter().map(move |&n| Cell { config, kind, spec: ModelSpec::new(family.clone(), n), params, seed })
        })
        .collect();
    let parts = cells.par_iter().map(run_cell).collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Runs every check of `config` and assembles the report in config order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut details = Vec::new();
    let mut trend = false;
    for c in &config.checks {
        log::info!("running {} on {} (N = {:?})", c.name, c.model, c.n_list);
        trend |= c.kind()?.spans_sizes();
        for out in run_check(c, config.seed)? {
            rows.push(out.row);
            details.push(out.detail);
        }
    }
    let mut notes = vec!["pass/fail is set only for checks with a declared contract; NA rows are reported evidence.".to_string()];
    if trend {
        notes.push(DIFFERENTIABILITY_NOTE.to_string());
    }
    Ok(ExperimentReport {
        metadata: ReportMetadata {
            config_hash: config.hash(),
            comparable_hash: config.comparable_hash(),
            name: config.name.clone(),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            generated: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        },
        rows,
        details,
        notes,
    })
}
