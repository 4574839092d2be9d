use super::*;
use super::enumerate::gray;
use crate::model::{build_ea, build_generalized, build_pspin, build_rfim, build_sk, BaseWeights, FeatureSet};
use crate::spin::SpinConfiguration;
use crate::stats::batch_mean_estimate;

/// Recomputes every energy from scratch; no Gray code, no incremental updates.
fn naive(instance: &ModelInstance) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let n = instance.n();
    let energies: Vec<f64> = (0..1u64 << n)
        .map(|b| instance.energy(&SpinConfiguration::from_bits(n, b)).unwrap())
        .collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = energies.iter().map(|e| (min - e).exp()).sum();
    let log_z = z.ln() - min;
    let a = instance.feature_count();
    let mut means = vec![0.0; a];
    let mut second = vec![vec![0.0; a]; a];
    for (b, e) in energies.iter().enumerate() {
        let p = (-e - log_z).exp();
        let f = instance.feature_values(&SpinConfiguration::from_bits(n, b as u64));
        for i in 0..a {
            means[i] += p * f[i];
            for j in 0..a {
                second[i][j] += p * f[i] * f[j];
            }
        }
    }
    (log_z, means, second)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn random_instances() -> Vec<ModelInstance> {
    let mut out = Vec::new();
    for s in 0..8u64 {
        let n = 4 + s as usize;
        out.push(build_sk(n, 0.5 + 0.2 * s as f64, 0.3 + 0.1 * s as f64, 0.1 * s as f64, 11, s).unwrap());
    }
    for s in 0..4u64 {
        out.push(build_ea(&[2, 3 + s as usize], true, 0.6 + 0.3 * s as f64, 12, s).unwrap());
    }
    for s in 0..4u64 {
        out.push(build_rfim(&[3, 2 + s as usize], s % 2 == 0, 0.4, 0.7, 13, s).unwrap());
    }
    for s in 0..4u64 {
        out.push(build_pspin(6 + s as usize, 3, 1.1, 0.5, 0.2, 14, s).unwrap());
    }
    out
}

#[test]
fn independent_spins_have_closed_form_partition() {
    for n in [1, 5, 13, 16] {
        let m = build_sk(n, 0.0, 0.0, 0.3, 1, 0).unwrap();
        let expected = n as f64 * (2.0 * 0.3f64.cosh()).ln();
        assert!(rel(log_partition(&m).unwrap(), expected) < 1e-12);
        let psi = free_energy_per_site(&m).unwrap();
        assert!((psi - 0.737_488_0).abs() < 1e-6, "{psi}");
        for v in feature_averages(&m).unwrap() {
            assert!((v - 0.3f64.tanh()).abs() < 1e-12);
        }
        let q = pair_overlap_moment(&m).unwrap();
        assert!((q - 0.3f64.tanh().powi(2)).abs() < 1e-12);
    }
}

#[test]
fn zero_field_magnetization_vanishes() {
    let m = build_sk(7, 0.0, 0.0, 0.0, 1, 0).unwrap();
    for v in feature_averages(&m).unwrap() {
        assert!(v.abs() < 1e-15);
    }
}

#[test]
fn empty_features_give_n_log_two() {
    let m = build_generalized(9, BaseWeights::uniform(), FeatureSet::empty(9), 1.0, 1, 0).unwrap();
    assert!(rel(log_partition(&m).unwrap(), 9.0 * 2f64.ln()) < 1e-14);
}

#[test]
fn ea_at_zero_gamma_is_uniform() {
    let m = build_ea(&[2, 4], true, 0.0, 3, 0).unwrap();
    assert!((free_energy_per_site(&m).unwrap() - 2f64.ln()).abs() < 1e-14);
    assert!(pair_overlap_moment(&m).unwrap().abs() < 1e-15);
}

#[test]
fn gray_engine_matches_naive_oracle() {
    for m in random_instances() {
        let (log_z, means, _) = naive(&m);
        let moments = exact_moments(&m).unwrap();
        assert!(rel(moments.log_partition, log_z) < 1e-9, "{m:?}");
        for (a, b) in moments.feature_means.iter().zip(&means) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((moments.total_probability - 1.0).abs() < 1e-12);
    }
}

#[test]
fn multi_chunk_enumeration_matches_naive_oracle() {
    let m = build_sk(16, 1.3, 0.8, 0.1, 5, 2).unwrap();
    let (log_z, means, _) = naive(&m);
    let ens = GibbsEnsemble::new(m);
    assert!(rel(ens.log_partition().unwrap(), log_z) < 1e-12);
    for (a, b) in ens.feature_averages().unwrap().iter().zip(&means) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn covariance_matches_naive_oracle() {
    let m = build_sk(8, 1.0, 0.9, 0.2, 6, 0).unwrap();
    let (_, means, second) = naive(&m);
    let ens = GibbsEnsemble::new(m);
    let cov = ens.feature_covariance().unwrap();
    for a in 0..8 {
        for b in 0..8 {
            let expected = second[a][b] - means[a] * means[b];
            assert!((cov[a][b] - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn h_moments_match_generic_expectation() {
    let m = build_sk(9, 1.0, 0.7, 0.0, 7, 3).unwrap();
    let g = m.perturbation().to_vec();
    let ens = GibbsEnsemble::new(m);
    let h = |f: &[f64]| f.iter().zip(&g).map(|(f, g)| f * g).sum::<f64>() / 9.0;
    let mean = ens.expectation(|_, f| h(f)).unwrap();
    let second = ens.expectation(|_, f| h(f).powi(2)).unwrap();
    let moments = ens.moments().unwrap();
    assert!((moments.h_mean - mean).abs() < 1e-14);
    assert!((moments.h_second - second).abs() < 1e-14);
}

#[test]
fn energy_shift_moves_log_partition_exactly() {
    let m = build_sk(10, 1.5, 0.6, 0.2, 8, 0).unwrap();
    let base = log_partition(&m).unwrap();
    for shift in [-1e4, -3.5, 0.25, 1e4] {
        let shifted = log_partition(&m.with_energy_shift(shift)).unwrap();
        assert!((shifted - (base - shift)).abs() < 1e-10, "{shift}: {}", shifted - base + shift);
    }
}

#[test]
fn pair_overlap_within_self_overlap_bounds() {
    for m in random_instances() {
        let r11 = m.self_overlap_constant(1e-12).unwrap();
        let q = pair_overlap_moment(&m).unwrap();
        assert!(q >= 0.0 && q <= r11 + 1e-12);
    }
}

#[test]
fn too_large_for_exact_is_reported() {
    let m = build_sk(25, 1.0, 1.0, 0.0, 1, 0).unwrap();
    assert!(matches!(log_partition(&m), Err(Error::TooLargeForExact { n: 25, limit: 24 })));
    let ens = GibbsEnsemble::new(m.clone());
    assert_eq!(ens.mode(), EngineMode::Mcmc);
    assert!(ens.exact_replica_sampler(0).is_err());
    assert!(GibbsEnsemble::with_mode(m, EngineMode::Exact).is_err());
}

#[test]
fn exact_sampler_is_uniform_on_free_spins() {
    let m = build_sk(2, 0.0, 0.0, 0.0, 1, 0).unwrap();
    let ens = GibbsEnsemble::new(m);
    let mut s = ens.exact_replica_sampler(42).unwrap();
    let draws = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[s.next_bits() as usize] += 1;
    }
    let sd = (0.25 * 0.75 / draws as f64).sqrt();
    for c in counts {
        assert!((c as f64 / draws as f64 - 0.25).abs() < 3.0 * sd, "{counts:?}");
    }
}

#[test]
fn exact_sampler_two_state_law() {
    let m = build_sk(1, 0.0, 0.0, 5.0, 1, 0).unwrap();
    let ens = GibbsEnsemble::new(m);
    let mut s = ens.exact_replica_sampler(7).unwrap();
    let draws = 100_000;
    let plus = (0..draws).filter(|_| s.draw().get(0) == 1).count() as f64 / draws as f64;
    let p = 1.0 / (1.0 + (-10.0f64).exp());
    let sd = (p * (1.0 - p) / draws as f64).sqrt();
    assert!((plus - p).abs() < 3.0 * sd, "{plus} vs {p}");
}

#[test]
fn exact_sampler_matches_marginals() {
    let m = build_sk(10, 1.2, 0.5, 0.3, 9, 0).unwrap();
    let ens = GibbsEnsemble::new(m);
    let target = ens.feature_averages().unwrap()[0];
    let q = ens.pair_overlap_moment().unwrap();
    let mut s = ens.exact_replica_sampler(3).unwrap();
    let draws = 40_000;
    let mut spins = Vec::with_capacity(draws);
    let mut overlaps = Vec::with_capacity(draws);
    for _ in 0..draws {
        let a = s.draw();
        let b = s.draw();
        spins.push(a.value(0));
        overlaps.push((0..10).map(|i| a.value(i) * b.value(i)).sum::<f64>() / 10.0);
    }
    assert!(batch_mean_estimate(&spins, draws).consistent_with(target, 3.0));
    assert!(batch_mean_estimate(&overlaps, draws).consistent_with(q, 3.0));
}

#[test]
fn exact_sampler_is_deterministic_per_stream() {
    let ens = GibbsEnsemble::new(build_sk(8, 1.0, 0.5, 0.0, 2, 0).unwrap());
    let a: Vec<u64> = {
        let mut s = ens.exact_replica_sampler(5).unwrap();
        (0..200).map(|_| s.next_bits()).collect()
    };
    let b: Vec<u64> = {
        let mut s = ens.exact_replica_sampler(5).unwrap();
        (0..200).map(|_| s.next_bits()).collect()
    };
    let c: Vec<u64> = {
        let mut s = ens.exact_replica_sampler(6).unwrap();
        (0..200).map(|_| s.next_bits()).collect()
    };
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn cdf_table_probabilities_match_moments() {
    let m = build_sk(6, 0.9, 0.4, 0.1, 2, 0).unwrap();
    let ens = GibbsEnsemble::new(m.clone());
    let table = ens.cdf_table().unwrap();
    let log_z = ens.log_partition().unwrap();
    for k in 0..64u64 {
        let c = SpinConfiguration::from_bits(6, gray(k));
        let p = (m.log_weight(&c) - log_z).exp();
        assert!((table.probability(k as usize) - p).abs() < 1e-14);
    }
}

#[test]
fn mcmc_recovers_free_spin_magnetization() {
    let m = build_sk(6, 0.0, 0.0, 0.4, 1, 0).unwrap();
    let chain = mcmc_sampler(&m, 20_100, 100, 1, 17).unwrap();
    let mags: Vec<f64> = chain.map(|c| (0..6).map(|i| c.value(i)).sum::<f64>() / 6.0).collect();
    assert_eq!(mags.len(), 20_000);
    assert!(batch_mean_estimate(&mags, 50).consistent_with(0.4f64.tanh(), 3.0));
}

#[test]
fn mcmc_state_frequencies_match_exact_law() {
    let m = build_sk(3, 1.0, 0.6, 0.2, 4, 1).unwrap();
    let ens = GibbsEnsemble::new(m.clone());
    let log_z = ens.log_partition().unwrap();
    let states: Vec<u64> = mcmc_sampler(&m, 200_100, 100, 1, 23).unwrap().map(|c| c.bits().unwrap()).collect();
    for b in 0..8u64 {
        let p = (m.log_weight(&SpinConfiguration::from_bits(3, b)) - log_z).exp();
        let hits: Vec<f64> = states.iter().map(|&s| if s == b { 1.0 } else { 0.0 }).collect();
        let est = batch_mean_estimate(&hits, 100);
        assert!(est.consistent_with(p, 3.0), "state {b}: {est:?} vs {p}");
    }
}

#[test]
fn mcmc_budget_and_arguments() {
    let m = build_sk(4, 1.0, 0.0, 0.0, 1, 0).unwrap();
    assert_eq!(mcmc_sampler(&m, 130, 100, 10, 0).unwrap().count(), 3);
    assert!(mcmc_sampler(&m, 100, 100, 10, 0).is_err());
    assert!(mcmc_sampler(&m, 200, 100, 0, 0).is_err());
}

#[test]
fn replica_sampler_uses_independent_chains_in_mcmc_mode() {
    let m = build_sk(5, 1.0, 0.5, 0.0, 1, 0).unwrap();
    let ens = GibbsEnsemble::with_mode(m, EngineMode::Mcmc).unwrap();
    let mut s = ens.replica_sampler(3, 9).unwrap();
    assert!(!s.is_exact());
    let t = s.draw_tuple(3);
    assert_eq!(t.len(), 3);
}
