//! Runs the shipped full suite and evaluates each acceptance criterion.
//!
//! One line per criterion goes straight to stderr so it shows up even when
//! libtest captures output.

use std::io::Write;
use std::path::PathBuf;

use gglab::gaussian::{hermite_variance, psi_variance_via_hermite, Polynomial};
use gglab::gibbs;
use gglab::model::build_sk;
use gglab::report::{strip_timestamp, ReportRow, Verdict};
use gglab::{run_experiment, ExperimentConfig, ExperimentReport, ModelInstance, SpinConfiguration};

fn say(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

fn suite_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/full_suite.toml")
}

fn rows<'a>(report: &'a ExperimentReport, check: &str) -> Vec<(&'a ReportRow, &'a serde_json::Value)> {
    report.rows.iter().zip(&report.details).filter(|(r, _)| r.check == check).collect()
}

struct Outcome {
    id: usize,
    title: &'static str,
    pass: bool,
    hard: bool,
}

fn record(out: &mut Vec<Outcome>, id: usize, title: &'static str, pass: bool, hard: bool, detail: String) {
    let verdict = match (pass, hard) {
        (true, _) => "PASS",
        (false, true) => "FAIL",
        (false, false) => "FAIL (reported, not enforced)",
    };
    say(&format!("criterion {id:>2} [{title}]: {verdict} - {detail}"));
    out.push(Outcome { id, title, pass, hard });
}

/// Every configuration, energies recomputed from scratch in natural bit order.
fn naive(instance: &ModelInstance) -> (f64, Vec<f64>) {
    let n = instance.n();
    let energies: Vec<f64> =
        (0..1u64 << n).map(|b| instance.energy(&SpinConfiguration::from_bits(n, b)).unwrap()).collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let log_z = energies.iter().map(|e| (min - e).exp()).sum::<f64>().ln() - min;
    let mut means = vec![0.0; instance.feature_count()];
    for (b, e) in energies.iter().enumerate() {
        let p = (-e - log_z).exp();
        for (m, f) in means.iter_mut().zip(instance.feature_values(&SpinConfiguration::from_bits(n, b as u64))) {
            *m += p * f;
        }
    }
    (log_z, means)
}

/// `E[f(g)]` by composite Simpson on `[-12, 12]`.
fn simpson_normal(f: impl Fn(f64) -> f64) -> f64 {
    let (a, b, m) = (-12.0f64, 12.0f64, 40_000usize);
    let h = (b - a) / m as f64;
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = 0.0;
    for i in 0..=m {
        let x = a + i as f64 * h;
        let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(x) * phi(x);
    }
    s * h / 3.0
}

#[test]
fn acceptance() {
    let config = ExperimentConfig::load(suite_path()).expect("full suite parses");
    let report = run_experiment(&config).expect("suite runs");
    let mut out = Vec::new();

    // 1
    let f1 = rows(&report, "gg_residual_f1");
    let worst = f1.iter().map(|(r, _)| r.estimate.abs() / r.std_error).fold(0.0, f64::max);
    let enough = f1.iter().all(|(_, d)| {
        d["disorder_samples"].as_u64().unwrap() >= 256 && d["replica_draws"].as_u64().unwrap() >= 512
    });
    let models: std::collections::BTreeSet<&str> = f1.iter().map(|(r, _)| r.model.as_str()).collect();
    let pass = f1.len() == 18 && enough && models.len() == 2 && f1.iter().all(|(r, _)| r.pass == Verdict::Pass);
    record(&mut out, 1, "exchangeability, f = 1", pass, true, format!("{} cells, max |delta|/se = {worst:.2}", f1.len()));

    // 2
    let h = 0.3f64;
    let m = build_sk(10, 0.0, 0.0, h, config.seed, 0).unwrap();
    let moments = gibbs::exact_moments(&m).unwrap();
    let psi_err = (moments.log_partition / 10.0 - (h.exp() + (-h).exp()).ln()).abs();
    let t = h.sinh() / h.cosh();
    let m_err = moments.feature_means.iter().fold(0.0f64, |a, x| a.max((x - t).abs()));
    let nu_err = (moments.feature_means.iter().map(|x| x * x).sum::<f64>() / 10.0 - t * t).abs();
    let pm = rows(&report, "product_measure");
    let d = pm[0].1;
    let f1_ok = d["residual_one"]["delta_hat"].as_f64().unwrap().abs() <= 3.0 * d["residual_one"]["std_error"].as_f64().unwrap();
    let r12 = d["residual_r12"]["delta_hat"].as_f64().unwrap();
    let r12_se = d["residual_r12"]["std_error"].as_f64().unwrap();
    let r12_exact = -(1.0 - t * t).powi(2) / 20.0;
    let pass = psi_err <= 1e-12 && m_err <= 1e-12 && nu_err <= 1e-10 && f1_ok && pm[0].0.pass == Verdict::Pass;
    record(
        &mut out,
        2,
        "product measure",
        pass,
        true,
        format!(
            "psi err {psi_err:.1e}, <sigma> err {m_err:.1e}, nu(R12) err {nu_err:.1e}, delta(f=1) within 3se: {f1_ok}; \
             delta(R12) = {r12:.5} +- {r12_se:.5} vs finite-N value {r12_exact:.5}"
        ),
    );

    // 3
    let mut worst = 0.0f64;
    for n in [4usize, 8, 12] {
        for s in 0..20u64 {
            let beta = 0.5 + (s % 4) as f64 * 0.4;
            let inst = build_sk(n, beta, 0.7, 0.2 - 0.05 * (s % 3) as f64, 1000 + n as u64, s).unwrap();
            let fast = gibbs::exact_moments(&inst).unwrap();
            let (log_z, means) = naive(&inst);
            worst = worst.max((fast.log_partition - log_z).abs() / log_z.abs());
            for (a, b) in fast.feature_means.iter().zip(&means) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }
    let suite_ok = rows(&report, "oracle_equivalence").iter().all(|(r, _)| r.pass == Verdict::Pass);
    record(&mut out, 3, "oracle equivalence", worst <= 1e-9 && suite_ok, true, format!("max relative error {worst:.2e} over 60 instances"));

    // 4
    let gd = rows(&report, "gamma_derivative");
    let n_seeds = gd[0].1.as_array().unwrap().len();
    let pass = gd.iter().all(|(r, _)| r.estimate <= 1e-6) && n_seeds == 10;
    record(&mut out, 4, "derivative identity", pass, true, format!("max abs_error {:.2e} over {n_seeds} seeds", gd[0].0.estimate));

    // 5
    let cd = rows(&report, "covariance_derivative");
    let pairs = cd[0].1["records"][0]["pairs"].as_array().unwrap().len();
    let pass = cd.iter().all(|(r, _)| r.estimate <= 1e-5) && pairs == 20;
    record(&mut out, 5, "covariance identity", pass, true, format!("max discrepancy {:.2e} over {pairs} pairs", cd[0].0.estimate));

    // 6
    let cv = rows(&report, "convexity");
    let seeds = cv[0].1.as_array().unwrap().len();
    let grid = cv[0].1[0]["grid_points"].as_u64().unwrap();
    let pass = cv.iter().all(|(r, _)| r.pass == Verdict::Pass) && seeds == 5 && grid == 21;
    record(&mut out, 6, "convexity", pass, true, format!("min second difference {:.3e}, {seeds} seeds, {grid} points", cv[0].0.estimate));

    // 7
    let cc = rows(&report, "concentration");
    let summary = cc.iter().find(|(r, _)| r.size.is_none()).unwrap();
    let spreads = summary.1["spread"].to_string();
    record(&mut out, 7, "concentration", summary.0.pass == Verdict::Pass, true, format!("max/min per mode {spreads}"));

    // 8
    let inst = build_sk(1, 0.0, 0.9, 0.3, config.seed, 0).unwrap();
    let psi = |g: f64| (2.0 * (0.9 * g + 0.3).cosh()).ln();
    let mean = simpson_normal(psi);
    let var_oracle = simpson_normal(|g| (psi(g) - mean).powi(2));
    let rec = psi_variance_via_hermite(&inst, 8, 20_000, config.seed).unwrap();
    let gap = (rec.truncated_sum - var_oracle).abs() / var_oracle;
    let cube = hermite_variance(&Polynomial::new(1, [(1.0, vec![3])]).functional(), 3).unwrap().truncated_sum;
    let mixed = hermite_variance(&Polynomial::new(3, [(1.0, vec![1, 1, 0]), (0.5, vec![0, 2, 2]), (-1.0, vec![0, 0, 1])]).functional(), 4)
        .unwrap()
        .truncated_sum;
    // Var(g1 g2 + g2^2 g3^2 / 2 - g3) = 1 + (9 - 1) / 4 + 1 = 4
    let poly_ok = (cube - 15.0).abs() <= 1e-8 && (mixed - 4.0).abs() <= 1e-8;
    let row_ok = rows(&report, "hermite_identity").iter().all(|(r, _)| r.pass == Verdict::Pass);
    let pass = gap <= 0.01 && rec.monotone && poly_ok && row_ok;
    record(
        &mut out,
        8,
        "Hermite variance identity",
        pass,
        true,
        format!("psi_1 K=8 gap {:.2e} vs Simpson oracle, monotone {}, polynomials exact {poly_ok}", gap, rec.monotone),
    );

    // 9
    let pb = rows(&report, "proof_bound");
    let pass = pb.len() == 18 && pb.iter().all(|(r, _)| r.pass == Verdict::Pass);
    let slack = pb
        .iter()
        .map(|(r, d)| d["rhs"]["value"].as_f64().unwrap() - r.estimate)
        .fold(f64::INFINITY, f64::min);
    record(&mut out, 9, "proof bound", pass, true, format!("{} cells, smallest rhs - lhs {slack:.3e}", pb.len()));

    // 10
    let tr = rows(&report, "gg_trend");
    let deltas: Vec<&ReportRow> = tr.iter().filter(|(r, _)| r.size.is_some() && r.functional.starts_with("abs_delta")).map(|(r, _)| *r).collect();
    let monotone = deltas.windows(2).all(|w| w[1].estimate <= w[0].estimate + 2.0 * w[0].std_error.hypot(w[1].std_error));
    let spread: Vec<&ReportRow> = tr.iter().filter(|(r, _)| r.size.is_some() && r.functional == "nu_abs_h_minus_nu_h").map(|(r, _)| *r).collect();
    let ratio = spread[0].estimate / spread[spread.len() - 1].estimate;
    let seq: Vec<String> = deltas.iter().map(|r| format!("{:.4}", r.estimate)).collect();
    record(
        &mut out,
        10,
        "GG trend (evidence)",
        monotone && ratio >= 1.5,
        false,
        format!("|delta_N| = [{}], non-increasing within 2se: {monotone}; self-averaging ratio N=6/N=18 = {ratio:.3}", seq.join(", ")),
    );

    // 11
    let sc = rows(&report, "averaged_scan");
    let per_n: Vec<String> = sc.iter().filter(|(r, _)| r.size.is_some()).map(|(r, _)| format!("N={}: {:.4} +- {:.4}", r.size.unwrap(), r.estimate, r.std_error)).collect();
    let summary = sc.iter().find(|(r, _)| r.size.is_none()).unwrap();
    record(&mut out, 11, "averaged identity", summary.0.pass == Verdict::Pass, true, per_n.join(", "));

    // 12
    let sa = rows(&report, "sampler_agreement");
    record(&mut out, 12, "sampler agreement", sa[0].0.estimate < 0.05, true, format!("TV = {:.4} at N = 12", sa[0].0.estimate));

    // 13
    let again = run_experiment(&config).expect("second run");
    let (a, b) = (report.csv_string().unwrap(), again.csv_string().unwrap());
    let identical = strip_timestamp(&a) == strip_timestamp(&b);
    record(&mut out, 13, "determinism", identical, true, format!("{} CSV bytes compared", a.len()));

    let failed: Vec<String> = out.iter().filter(|o| o.hard && !o.pass).map(|o| format!("{} ({})", o.id, o.title)).collect();
    say(&format!(
        "acceptance: {}/{} criteria pass",
        out.iter().filter(|o| o.pass).count(),
        out.len()
    ));
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
