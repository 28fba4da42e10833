use std::collections::HashMap;

use approx::assert_abs_diff_eq;
use rand::Rng;

use super::*;
use crate::kernels::{ClusterParams, KernelFamily};
use crate::mixing::{batch_means_se, nig_psi, MixingMeasure};
use crate::partitions::Partition;
use crate::quadrature::integrate_half_line;
use crate::rng::derive_rng;

const NIG: MixingMeasure = MixingMeasure::Nig { alpha: 1.0, tau: 1.0 };

fn params(mu: f64, zeta: f64) -> ClusterParams {
    ClusterParams { mu, theta: vec![], zeta }
}

fn base0() -> BaseMeasure {
    BaseMeasure::new(vec![0.0], vec![1.0], 5.0, 1.0).unwrap()
}

fn toy_data(y: &[f64]) -> Dataset {
    Dataset::from_flat(y.to_vec(), vec![true; y.len()], vec![], 0).unwrap()
}

/// Draws `n` observations from one accelerated life kernel with a single
/// N(0, 0.25) covariate.
fn single_cluster_data(n: usize, mu: f64, theta: f64, zeta: f64, seed: u64) -> Dataset {
    let mut rng = derive_rng(seed, 99);
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = 0.5 * rng.sample::<f64, _>(rand_distr::StandardNormal);
        y.push(mu - theta * xi + zeta * KernelFamily::TypeIMinimum.std_sample(&mut rng));
        x.push(xi);
    }
    Dataset::from_flat(y, vec![true; n], x, 1).unwrap()
}

fn state_from(alloc: &[usize], clusters: Vec<ClusterParams>, u: f64, measure: MixingMeasure) -> SamplerState {
    let mut sizes = vec![0; clusters.len()];
    for &a in alloc {
        sizes[a] += 1;
    }
    SamplerState {
        alloc: alloc.to_vec(),
        clusters: clusters.into_iter().zip(sizes).map(|(params, size)| Cluster { params, size }).collect(),
        u,
        measure,
        theta_common: vec![],
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn single_observation_stays_clustered() {
    let data = toy_data(&[0.3]);
    let model = Model::new(&data, ModelVariant::M0, KernelFamily::Normal, base0(), LikelihoodMode::Data);
    let mut state = state_from(&[0], vec![params(0.0, 1.0)], 1.0, NIG);
    let mut rng = derive_rng(1, 0);
    for _ in 0..100 {
        update_allocation(&model, &mut state, 0, 3, &mut rng).unwrap();
        assert_eq!(state.k(), 1);
        assert_eq!(state.alloc, vec![0]);
        state.check_invariants().unwrap();
    }
}

#[test]
fn unit_likelihood_allocation_matches_predictive_weights() {
    // clusters {0,1,2}, {3}, {4,5}; observation 0 is moved
    let data = toy_data(&[0.0; 6]);
    let model = Model::new(&data, ModelVariant::M0, KernelFamily::Normal, base0(), LikelihoodMode::Unit);
    let start = state_from(&[0, 0, 0, 1, 2, 2], vec![params(0.0, 1.0), params(1.0, 1.0), params(2.0, 1.0)], 2.0, NIG);
    let r = 3;
    let w = NIG.predictive_weights(&[2, 1, 2], 2.0, r).unwrap();
    let mut probs = w.existing.clone();
    probs.push(w.new_per_aux * r as f64);
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);

    let reps = 100_000;
    let mut counts = [0usize; 4];
    let mut rng = derive_rng(2, 0);
    for _ in 0..reps {
        let mut s = start.clone();
        update_allocation(&model, &mut s, 0, r, &mut rng).unwrap();
        counts[s.alloc[0].min(3)] += 1;
    }
    for (c, p) in counts.iter().zip(&probs) {
        let freq = *c as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "freq {freq} vs {p}");
    }
}

#[test]
fn singleton_reuses_its_parameters_as_auxiliary() {
    // observation 0 alone in a cluster that fits it perfectly; the other
    // cluster is far away. It must keep (a copy of) its own parameters.
    let data = toy_data(&[5.0, -5.0, -5.0]);
    let model = Model::new(&data, ModelVariant::M0, KernelFamily::Normal, base0(), LikelihoodMode::Data);
    let mut rng = derive_rng(3, 0);
    for _ in 0..200 {
        let mut s = state_from(&[0, 1, 1], vec![params(5.0, 0.05), params(-5.0, 0.05)], 1.0, NIG);
        update_allocation(&model, &mut s, 0, 3, &mut rng).unwrap();
        s.check_invariants().unwrap();
        assert_eq!(s.k(), 2);
        assert_eq!(s.clusters[s.alloc[0]].params, params(5.0, 0.05));
    }
}

#[test]
fn well_separated_clusters() {
    let data = toy_data(&[10.0, 10.0, -10.0]);
    let model = Model::new(&data, ModelVariant::M0, KernelFamily::Normal, base0(), LikelihoodMode::Data);
    let start = state_from(&[0, 0, 1], vec![params(10.0, 0.1), params(-10.0, 0.1)], 1.0, NIG);
    let mut rng = derive_rng(4, 0);
    let reps = 20_000;
    let mut hits = 0;
    for _ in 0..reps {
        let mut s = start.clone();
        update_allocation(&model, &mut s, 0, 3, &mut rng).unwrap();
        if s.clusters[s.alloc[0]].params.mu == 10.0 {
            hits += 1;
        }
    }
    assert!(hits as f64 / reps as f64 > 0.999);
}

#[test]
fn zero_steps_are_always_accepted() {
    let data = single_cluster_data(40, 2.0, -1.5, 0.2, 5);
    let base = BaseMeasure::new(vec![2.0], vec![1.0], 5.0, 1.0).unwrap();
    let model = Model::new(&data, ModelVariant::M1, KernelFamily::TypeIMinimum, base, LikelihoodMode::Data);
    let mut state = SamplerState::single_cluster(40, params(2.0, 0.3), 3.0, NIG, vec![-1.0]);
    let mut rng = derive_rng(5, 0);
    for _ in 0..50 {
        let o = update_u(&mut state, 0.0, &mut rng);
        assert!(o.accepted && o.log_ratio == 0.0);
        let o = update_tau(&mut state, 1.0, 1.0, 0.0, &mut rng);
        assert!(o.accepted && o.log_ratio == 0.0);
        for o in update_theta_common(&model, &mut state, 20.0, 0.0, &mut rng) {
            assert!(o.accepted && o.log_ratio == 0.0);
        }
        let rs = reshuffle_clusters(&model, &mut state, 0.0, 0.0, &mut rng);
        assert_eq!((rs.location_accepted, rs.scale_accepted), (1, 1));
    }
    assert_eq!(state.u, 3.0);
    assert_eq!(state.theta_common, vec![-1.0]);
    assert_eq!(state.clusters[0].params, params(2.0, 0.3));
}

/// Long-run mean of a positive scalar against the quadrature mean of its
/// unnormalized log density.
fn check_against_quadrature(samples: &[f64], log_density: impl Fn(f64) -> f64) {
    let z = integrate_half_line(|x| if x > 0.0 { log_density(x).exp() } else { 0.0 }, 1e-12, 1e-10).unwrap();
    let m1 = integrate_half_line(|x| if x > 0.0 { x * log_density(x).exp() } else { 0.0 }, 1e-12, 1e-10).unwrap();
    let exact = m1.value / z.value;
    let got = mean(samples);
    let se = batch_means_se(samples);
    assert!((got - exact).abs() < 3.0 * se, "mean {got} vs {exact} (se {se})");
}

#[test]
fn u_long_run_mean_matches_quadrature() {
    let (n, k, alpha, tau) = (5usize, 2usize, 1.0, 1.0);
    let mut state = state_from(&[0, 0, 0, 1, 1], vec![params(0.0, 1.0), params(0.0, 1.0)], 1.0, NIG);
    let mut rng = derive_rng(6, 0);
    let mut draws = Vec::with_capacity(200_000);
    for it in 0..201_000 {
        update_u(&mut state, 1.2, &mut rng);
        if it >= 1000 {
            draws.push(state.u);
        }
    }
    check_against_quadrature(&draws, |u| {
        (n as f64 - 1.0) * u.ln() - alpha * (u + tau).sqrt() + (k as f64 / 2.0 - n as f64) * (u + tau).ln()
    });
}

#[test]
fn tau_long_run_mean_matches_quadrature() {
    let (n, k, u, alpha) = (5usize, 2usize, 1.0, 1.0);
    let mut state = state_from(&[0, 0, 0, 1, 1], vec![params(0.0, 1.0), params(0.0, 1.0)], u, NIG);
    let mut rng = derive_rng(7, 0);
    let mut draws = Vec::with_capacity(200_000);
    for it in 0..201_000 {
        update_tau(&mut state, 1.0, 1.0, 1.5, &mut rng);
        if it >= 1000 {
            draws.push(state.tau().unwrap());
        }
    }
    // Gamma(1, 1) prior density exp(-tau)
    check_against_quadrature(&draws, |t| {
        -t - alpha * nig_psi(u, t) + (k as f64 / 2.0 - n as f64) * (u + t).ln()
    });
}

#[test]
fn tau_shrinks_when_n_dominates_k() {
    let alloc = vec![0; 60];
    let mut state = state_from(&alloc, vec![params(0.0, 1.0)], 1.0, NIG);
    let mut rng = derive_rng(8, 0);
    let mut draws = Vec::new();
    for it in 0..40_000 {
        update_tau(&mut state, 1.0, 1.0, 1.5, &mut rng);
        if it >= 1000 {
            draws.push(state.tau().unwrap());
        }
    }
    // prior Gamma(1, 1): mean 1 and median ln 2
    let below_median = draws.iter().filter(|&&t| t < std::f64::consts::LN_2).count() as f64 / draws.len() as f64;
    assert!(mean(&draws) < 0.5);
    assert!(below_median > 0.75);
}

#[test]
fn alpha_gamma_update() {
    assert_eq!(alpha_full_conditional(1, 0.0, 2.0, 3.0), (3.0, 3.0));
    // psi(3) = sqrt(4) - sqrt(1) = 1 at tau = 1
    let mut state = state_from(&[0, 0, 1], vec![params(0.0, 1.0), params(0.0, 1.0)], 3.0, NIG);
    assert_abs_diff_eq!(nig_psi(3.0, 1.0), 1.0, epsilon = 1e-15);
    let mut rng = derive_rng(9, 0);
    let mode = AlphaMode::GammaPrior { shape: 1.0, rate: 1.0 };
    let m = 100_000;
    let draws: Vec<f64> = (0..m)
        .map(|_| {
            update_alpha(&mut state, mode, &mut rng);
            state.alpha().unwrap()
        })
        .collect();
    let se = 3f64.sqrt() / 2.0 / (m as f64).sqrt();
    assert!((mean(&draws) - 1.5).abs() < 3.0 * se);

    let mut state = state_from(&[0], vec![params(0.0, 1.0)], 3.0, NIG);
    update_alpha(&mut state, AlphaMode::Fixed, &mut rng);
    assert_eq!(state.alpha(), Some(1.0));
}

#[test]
fn common_theta_recovers_truth() {
    let data = single_cluster_data(500, 2.0, -1.5, 0.12, 10);
    let config = SamplerConfig { iters: 1500, burnin: 700, seed: 10, ..SamplerConfig::default() };
    let chain = run(&data, ModelVariant::M1, KernelFamily::TypeIMinimum, NIG, &config).unwrap();
    let theta: Vec<f64> = chain.draws.iter().map(|d| d.theta_common[0]).collect();
    assert!((mean(&theta) + 1.5).abs() < 0.1, "posterior mean {}", mean(&theta));
}

#[test]
fn common_theta_prior_recovery() {
    let data = single_cluster_data(30, 0.0, 0.0, 1.0, 11);
    let base = BaseMeasure::new(vec![0.0], vec![1.0], 5.0, 1.0).unwrap();
    let model = Model::new(&data, ModelVariant::M1, KernelFamily::Normal, base, LikelihoodMode::Unit);
    let mut state = SamplerState::single_cluster(30, params(0.0, 1.0), 1.0, NIG, vec![0.0]);
    let sd_x = model.covariate_sd[0];
    let prior_var = 4.0;
    let mut rng = derive_rng(11, 0);
    let mut draws = Vec::new();
    for it in 0..100_000 {
        update_theta_common(&model, &mut state, prior_var, 5.0 * sd_x, &mut rng);
        if it % 20 == 0 {
            draws.push(state.theta_common[0]);
        }
    }
    draws.sort_by(f64::total_cmp);
    let m = draws.len() as f64;
    let sd = prior_var.sqrt();
    let d = draws
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let cdf = 0.5 * libm::erfc(-t / sd / std::f64::consts::SQRT_2);
            (cdf - i as f64 / m).abs().max(((i + 1) as f64 / m - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.63 / m.sqrt(), "KS statistic {d}");
}

#[test]
fn reshuffle_normal_location_matches_sample_mean() {
    let mut rng = derive_rng(12, 0);
    let y: Vec<f64> = (0..50).map(|_| 3.0 + 0.5 * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    let data = toy_data(&y);
    let base = BaseMeasure::new(vec![0.0], vec![1e8], 5.0, 1.0).unwrap();
    let model = Model::new(&data, ModelVariant::M0, KernelFamily::Normal, base, LikelihoodMode::Data);
    let mut state = SamplerState::single_cluster(50, params(3.0, 0.5), 1.0, NIG, vec![]);
    let mut mus = Vec::new();
    for it in 0..101_000 {
        reshuffle_clusters(&model, &mut state, 0.8, 0.8, &mut rng);
        if it >= 1000 {
            mus.push(state.clusters[0].params.mu);
        }
    }
    let ybar = mean(&y);
    let se = batch_means_se(&mus);
    assert!((mean(&mus) - ybar).abs() < 3.0 * se, "{} vs {ybar} (se {se})", mean(&mus));
}

#[test]
fn hastings_ratios_are_antisymmetric() {
    let data = single_cluster_data(20, 1.0, 0.5, 0.3, 13);
    let base = BaseMeasure::new(vec![1.0, 0.0], vec![2.0, 20.0], 5.0, 1.0).unwrap();
    let model = Model::new(&data, ModelVariant::M2, KernelFamily::Logistic, base, LikelihoodMode::Data);
    let state = SamplerState::single_cluster(20, ClusterParams::new(1.0, vec![0.5], 0.3).unwrap(), 1.0, NIG, vec![]);
    let members: Vec<usize> = (0..20).collect();
    let mut rng = derive_rng(13, 0);
    for _ in 0..200 {
        let (a, b) = (rng.random_range(0.01..10.0), rng.random_range(0.01..10.0));
        let fwd = log_target_u(b, 7, 3, 1.3, 0.7) - log_target_u(a, 7, 3, 1.3, 0.7);
        let back = log_target_u(a, 7, 3, 1.3, 0.7) - log_target_u(b, 7, 3, 1.3, 0.7);
        assert_eq!(fwd, -back);
        let fwd = log_target_tau(b, 2.0, 7, 3, 1.3, 1.0, 1.0) - log_target_tau(a, 2.0, 7, 3, 1.3, 1.0, 1.0);
        let back = log_target_tau(a, 2.0, 7, 3, 1.3, 1.0, 1.0) - log_target_tau(b, 2.0, 7, 3, 1.3, 1.0, 1.0);
        assert_eq!(fwd, -back);
        let p = ClusterParams::new(a.ln(), vec![b - 5.0], a / 5.0).unwrap();
        let q = ClusterParams::new(b.ln(), vec![a - 5.0], b / 5.0).unwrap();
        let fwd = updates::log_target_cluster(&model, &state, &members, &q)
            - updates::log_target_cluster(&model, &state, &members, &p);
        let back = updates::log_target_cluster(&model, &state, &members, &p)
            - updates::log_target_cluster(&model, &state, &members, &q);
        assert_eq!(fwd, -back);
    }
    // the reported ratio is the target difference
    let mut s = state_from(&[0, 0, 1], vec![params(0.0, 1.0), params(0.0, 1.0)], 2.0, NIG);
    for _ in 0..50 {
        let before = s.u;
        let o = update_u(&mut s, 1.0, &mut rng);
        if o.accepted && s.u != before {
            let expect = log_target_u(s.u, 3, 2, 1.0, 1.0) - log_target_u(before, 3, 2, 1.0, 1.0);
            assert_abs_diff_eq!(o.log_ratio, expect, epsilon = 1e-12);
        }
    }
}

#[test]
fn invariants_hold_after_every_sweep() {
    let data = single_cluster_data(60, 1.0, 1.0, 0.5, 14);
    for (variant, measure) in [
        (ModelVariant::M0, NIG),
        (ModelVariant::M1, MixingMeasure::Dp { mass: 1.0 }),
        (ModelVariant::M2, MixingMeasure::Py { theta: 1.0, sigma: 0.3 }),
    ] {
        let config = SamplerConfig {
            alpha_mode: AlphaMode::GammaPrior { shape: 1.0, rate: 1.0 },
            seed: 14,
            ..SamplerConfig::default()
        };
        let mut s = Sampler::new(&data, variant, KernelFamily::TypeIMinimum, measure, &config).unwrap();
        for _ in 0..100 {
            s.sweep(true).unwrap();
            s.state.check_invariants().unwrap();
            assert_eq!(s.state.sizes().iter().sum::<usize>(), 60);
        }
    }
}

#[test]
fn bookkeeping_and_determinism() {
    let data = single_cluster_data(25, 1.0, 0.3, 0.4, 15);
    let config = SamplerConfig { iters: 31, burnin: 30, seed: 15, ..SamplerConfig::default() };
    let chain = run(&data, ModelVariant::M2, KernelFamily::Normal, NIG, &config).unwrap();
    assert_eq!(chain.len(), 1);
    assert_eq!(chain.draws[0].iter, 31);
    assert_eq!(chain.draws[0].loglik.len(), 25);

    let config = SamplerConfig { iters: 200, burnin: 100, thin: 4, seed: 15, ..SamplerConfig::default() };
    let a = run(&data, ModelVariant::M1, KernelFamily::Logistic, NIG, &config).unwrap();
    let b = run(&data, ModelVariant::M1, KernelFamily::Logistic, NIG, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 25);
    let c = run(&data, ModelVariant::M1, KernelFamily::Logistic, NIG, &SamplerConfig { stream: 1, ..config }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn configuration_errors() {
    let data = toy_data(&[1.0, 2.0]);
    let bad = |c: SamplerConfig| run(&data, ModelVariant::M0, KernelFamily::Normal, NIG, &c);
    assert!(matches!(bad(SamplerConfig { iters: 10, burnin: 10, ..Default::default() }), Err(Error::Config(_))));
    assert!(matches!(bad(SamplerConfig { thin: 0, ..Default::default() }), Err(Error::Config(_))));
    assert!(matches!(bad(SamplerConfig { r_aux: 0, ..Default::default() }), Err(Error::Config(_))));
    let c = SamplerConfig { iters: 5, burnin: 1, ..Default::default() };
    assert!(matches!(run(&data, ModelVariant::M1, KernelFamily::Normal, NIG, &c), Err(Error::Config(_))));
    let empty = toy_data(&[]);
    assert!(run(&empty, ModelVariant::M0, KernelFamily::Normal, NIG, &c).is_err());
    let bad_measure = MixingMeasure::Nig { alpha: -1.0, tau: 1.0 };
    assert!(run(&data, ModelVariant::M0, KernelFamily::Normal, bad_measure, &c).is_err());
}

fn all_partitions(n: usize) -> Vec<Partition> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Partition>) {
        if prefix.len() == n {
            out.push(Partition::from_labels(prefix));
            return;
        }
        let next = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for l in 0..=next {
            prefix.push(l);
            rec(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, &mut out);
    out
}

/// Total-variation distance between the sampled partition law and the EPPF.
pub(crate) fn eppf_tv(n: usize, sweeps: usize, seed: u64) -> f64 {
    let data = toy_data(&vec![0.0; n]);
    let config = SamplerConfig {
        iters: sweeps + 1000,
        burnin: 1000,
        tau_mode: TauMode::Fixed,
        likelihood: LikelihoodMode::Unit,
        record_loglik: false,
        seed,
        ..SamplerConfig::default()
    };
    let chain = run(&data, ModelVariant::M0, KernelFamily::Normal, NIG, &config).unwrap();
    let mut counts: HashMap<Partition, usize> = HashMap::new();
    for p in chain.partitions() {
        *counts.entry(p).or_default() += 1;
    }
    let mut tv = 0.0;
    let mut total_prob = 0.0;
    for p in all_partitions(n) {
        let prob = NIG.eppf(&p.sizes()).unwrap();
        total_prob += prob;
        let freq = counts.get(&p).copied().unwrap_or(0) as f64 / chain.len() as f64;
        tv += 0.5 * (freq - prob).abs();
    }
    assert_abs_diff_eq!(total_prob, 1.0, epsilon = 1e-8);
    tv
}

#[test]
fn unit_likelihood_chain_matches_eppf() {
    let tv = eppf_tv(3, 100_000, 16);
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn chain_round_trip_through_files() {
    let data = single_cluster_data(12, 1.0, 0.3, 0.4, 17);
    let config = SamplerConfig { iters: 60, burnin: 20, thin: 2, seed: 17, ..SamplerConfig::default() };
    for (variant, measure) in [(ModelVariant::M1, NIG), (ModelVariant::M2, MixingMeasure::Dp { mass: 0.7 })] {
        let chain = run(&data, variant, KernelFamily::TypeIMinimum, measure, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        io::write_chain(dir.path(), &chain).unwrap();
        let back = io::read_chain(dir.path()).unwrap();
        assert_eq!(back.partitions(), chain.partitions());
        assert_eq!(back, chain);
    }
}
