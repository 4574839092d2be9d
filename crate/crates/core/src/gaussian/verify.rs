use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{hermite_variance, mc_variance, psi_variance_via_hermite, GaussianFunctional, Polynomial};
use crate::error::Result;
use crate::model::build_sk;
use crate::rng::{self, Lane};

/// Exactness tolerance for polynomial variances.
pub const POLYNOMIAL_TOLERANCE: f64 = 1e-8;
/// Largest allowed order term beyond a polynomial's degree.
pub const POLYNOMIAL_TAIL: f64 = 1e-10;
/// Relative gap allowed between the `K = 8` truncation for `psi_1` and quadrature.
pub const PSI_RELATIVE_TOLERANCE: f64 = 0.01;

/// Random polynomials of total degree `<= 4` in 1 to 3 variables, coefficients in `[-2, 2]`.
pub fn polynomial_battery(count: usize, stream_seed: u64) -> Vec<Polynomial> {
    let mut rng = rng::stream(stream_seed, 0, Lane::Gaussian);
    (0..count)
        .map(|_| {
            let dim = rng.random_range(1..=3usize);
            let terms = rng.random_range(1..=5usize);
            let mut list = Vec::with_capacity(terms);
            while list.len() < terms {
                let e: Vec<u32> = (0..dim).map(|_| rng.random_range(0..=4u32)).collect();
                if e.iter().sum::<u32>() <= 4 {
                    list.push((rng.random_range(-2.0..2.0), e));
                }
            }
            Polynomial::new(dim, list)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialCheck {
    pub dimension: usize,
    pub degree: usize,
    pub exact: f64,
    pub hermite: f64,
    /// Largest `|term_k|` for `k > degree` up to `K_max`.
    pub tail: f64,
    pub pass: bool,
}

/// Hermite sum at `K = degree` against the analytic variance, plus the orders above it.
pub fn check_polynomial(p: &Polynomial) -> Result<PolynomialCheck> {
    let d = p.degree().max(1);
    let f = p.functional();
    let h = hermite_variance(&f, (d + 2).min(super::K_MAX))?;
    let exact = p.variance();
    let hermite = h.partial_sums[d - 1];
    let tail = h.per_order[d..].iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let pass = (hermite - exact).abs() <= POLYNOMIAL_TOLERANCE && tail <= POLYNOMIAL_TAIL;
    Ok(PolynomialCheck { dimension: p.dimension(), degree: p.degree(), exact, hermite, tail, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceFormulaRow {
    pub case: String,
    pub hermite: f64,
    pub reference: f64,
    pub reference_kind: String,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn row(case: &str, hermite: f64, reference: f64, kind: &str, tolerance: f64) -> VarianceFormulaRow {
    let error = (hermite - reference).abs();
    VarianceFormulaRow {
        case: case.into(),
        hermite,
        reference,
        reference_kind: kind.into(),
        error,
        tolerance,
        pass: error <= tolerance,
    }
}

/// Closed-form cases, a random polynomial battery, Monte Carlo cross-checks and `psi_1`.
pub fn variance_formula_suite(stream_seed: u64) -> Result<Vec<VarianceFormulaRow>> {
    let mut rows = Vec::new();
    let cubic = Polynomial::new(1, [(1.0, vec![3])]);
    let cases = [
        ("g", Polynomial::new(1, [(1.0, vec![1])])),
        ("g^2", Polynomial::new(1, [(1.0, vec![2])])),
        ("g1*g2", Polynomial::new(2, [(1.0, vec![1, 1])])),
        ("g^3", cubic.clone()),
    ];
    for (name, p) in &cases {
        let c = check_polynomial(p)?;
        rows.push(row(name, c.hermite, c.exact, "analytic", POLYNOMIAL_TOLERANCE));
    }
    let sine = GaussianFunctional::new(2, |g| (g[0] + g[1]).sin()).with_derivatives(|g, sets| {
        sets.iter()
            .map(|c| (g[0] + g[1] + f64::from(c.iter().sum::<u32>()) * std::f64::consts::FRAC_PI_2).sin())
            .collect()
    });
    // Only odd orders contribute e^{-2} 2^k / k!; the tail past K = 10 is below 1e-5.
    let h = hermite_variance(&sine, super::K_MAX)?;
    rows.push(row("sin(g1+g2)", h.truncated_sum, (1.0 - (-4.0f64).exp()) / 2.0, "analytic", 1e-4));
    for (i, p) in polynomial_battery(32, stream_seed).iter().enumerate() {
        let c = check_polynomial(p)?;
        let mut r = row(&format!("polynomial#{i}(n={},d={})", c.dimension, c.degree), c.hermite, c.exact, "analytic", POLYNOMIAL_TOLERANCE);
        r.pass &= c.tail <= POLYNOMIAL_TAIL;
        rows.push(r);
    }
    let lognormal = GaussianFunctional::new(1, |g| (0.5 * g[0]).exp())
        .with_derivatives(|g, sets| sets.iter().map(|c| 0.5f64.powi(c[0] as i32) * (0.5 * g[0]).exp()).collect());
    let exact = 0.25f64.exp() * (0.25f64.exp() - 1.0);
    let mc = mc_variance(&lognormal, 200_000, stream_seed)?;
    let h = hermite_variance(&lognormal, super::K_MAX)?;
    rows.push(row("exp(g/2) hermite", h.truncated_sum, exact, "analytic", 1e-8));
    rows.push(row("exp(g/2) monte carlo", mc.value, exact, "analytic (3 std_error)", 3.0 * mc.std_error));
    let m = build_sk(1, 0.0, 0.9, 0.3, stream_seed, 0)?;
    let psi = psi_variance_via_hermite(&m, 8, 20_000, stream_seed)?;
    let mut r = row(
        "psi_1 (K=8)",
        psi.truncated_sum,
        psi.quadrature_variance,
        "64-node quadrature (relative)",
        PSI_RELATIVE_TOLERANCE * psi.quadrature_variance,
    );
    r.pass &= psi.monotone;
    rows.push(r);
    Ok(rows)
}
