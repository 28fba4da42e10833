//! Single-site updates of the sampler state.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::state::{Cluster, Model, SamplerState};
use super::AlphaMode;
use crate::error::Result;
use crate::kernels::ClusterParams;
use crate::mixing::{nig_psi, MixingMeasure};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhOutcome {
    pub accepted: bool,
    /// Log acceptance ratio of the proposed move (including Jacobians).
    pub log_ratio: f64,
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    let v: f64 = rng.random();
    v.ln() < log_ratio
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws an index with probability proportional to `exp(log_w)`.
pub(crate) fn sample_log_weights<R: Rng + ?Sized>(log_w: &[f64], rng: &mut R) -> usize {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        // every candidate impossible: fall back to uniform
        return rng.random_range(0..log_w.len());
    }
    let total: f64 = log_w.iter().map(|w| (w - max).exp()).sum();
    let mut target = rng.random::<f64>() * total;
    for (idx, w) in log_w.iter().enumerate() {
        target -= (w - max).exp();
        if target < 0.0 {
            return idx;
        }
    }
    log_w.len() - 1
}

/// Reallocates observation `i` among the existing clusters and `r_aux`
/// auxiliary components drawn from the base measure. When `i` was alone in
/// its cluster, that cluster's parameters fill the first auxiliary slot.
pub fn update_allocation<R: Rng + ?Sized>(
    model: &Model<'_>,
    state: &mut SamplerState,
    i: usize,
    r_aux: usize,
    rng: &mut R,
) -> Result<()> {
    let old = state.alloc[i];
    state.clusters[old].size -= 1;
    let mut aux: Vec<ClusterParams> = Vec::with_capacity(r_aux);
    if state.clusters[old].size == 0 {
        aux.push(state.remove_cluster(old).params);
    }
    while aux.len() < r_aux {
        aux.push(model.base.sample(rng));
    }

    let sizes = state.sizes();
    let weights = state.measure.predictive_weights(&sizes, state.u, r_aux)?;
    let ln_new = weights.new_per_aux.ln();
    let mut log_w = Vec::with_capacity(sizes.len() + r_aux);
    for (c, w) in state.clusters.iter().zip(&weights.existing) {
        log_w.push(w.ln() + model.obs_log_lik(i, &c.params, &state.theta_common));
    }
    for a in &aux {
        log_w.push(ln_new + model.obs_log_lik(i, a, &state.theta_common));
    }

    let pick = sample_log_weights(&log_w, rng);
    let k = state.clusters.len();
    if pick < k {
        state.alloc[i] = pick;
        state.clusters[pick].size += 1;
    } else {
        state.alloc[i] = k;
        state.clusters.push(Cluster { params: aux.swap_remove(pick - k), size: 1 });
    }
    Ok(())
}

/// Log full conditional of `u` in log-u coordinates:
/// `n ln u - alpha sqrt(u + tau) + (k/2 - n) ln(u + tau)`.
pub fn log_target_u(u: f64, n: usize, k: usize, alpha: f64, tau: f64) -> f64 {
    let n = n as f64;
    n * u.ln() - alpha * (u + tau).sqrt() + (k as f64 / 2.0 - n) * (u + tau).ln()
}

/// Log full conditional of `tau` in log-tau coordinates under a
/// Gamma(shape, rate) prior.
pub fn log_target_tau(tau: f64, u: f64, n: usize, k: usize, alpha: f64, shape: f64, rate: f64) -> f64 {
    shape * tau.ln() - rate * tau - alpha * nig_psi(u, tau) + (k as f64 / 2.0 - n as f64) * (u + tau).ln()
}

fn log_rw<R: Rng + ?Sized>(
    current: f64,
    step: f64,
    target: impl Fn(f64) -> f64,
    rng: &mut R,
) -> (f64, MhOutcome) {
    let proposal = current * (step * std_normal(rng)).exp();
    if !(proposal > 0.0 && proposal.is_finite()) {
        return (current, MhOutcome { accepted: false, log_ratio: f64::NEG_INFINITY });
    }
    let log_ratio = target(proposal) - target(current);
    let accepted = accept(log_ratio, rng);
    (if accepted { proposal } else { current }, MhOutcome { accepted, log_ratio })
}

/// Random-walk Metropolis-Hastings on `ln u`. No-op (reported as accepted)
/// for measures other than N-IG.
pub fn update_u<R: Rng + ?Sized>(state: &mut SamplerState, step: f64, rng: &mut R) -> MhOutcome {
    let MixingMeasure::Nig { alpha, tau } = state.measure else {
        return MhOutcome { accepted: true, log_ratio: 0.0 };
    };
    let (n, k) = (state.n(), state.k());
    let (u, out) = log_rw(state.u, step, |u| log_target_u(u, n, k, alpha, tau), rng);
    state.u = u;
    out
}

/// Random-walk Metropolis-Hastings on `ln tau` under a Gamma(shape, rate)
/// prior.
pub fn update_tau<R: Rng + ?Sized>(state: &mut SamplerState, shape: f64, rate: f64, step: f64, rng: &mut R) -> MhOutcome {
    let MixingMeasure::Nig { alpha, tau } = state.measure else {
        return MhOutcome { accepted: true, log_ratio: 0.0 };
    };
    let (n, k, u) = (state.n(), state.k(), state.u);
    let (tau, out) = log_rw(tau, step, |t| log_target_tau(t, u, n, k, alpha, shape, rate), rng);
    state.measure = MixingMeasure::Nig { alpha, tau };
    out
}

/// Gamma(shape + k, rate + psi(u)) full conditional of `alpha`.
pub fn alpha_full_conditional(k: usize, psi_u: f64, shape: f64, rate: f64) -> (f64, f64) {
    (shape + k as f64, rate + psi_u)
}

pub fn update_alpha<R: Rng + ?Sized>(state: &mut SamplerState, mode: AlphaMode, rng: &mut R) {
    let (AlphaMode::GammaPrior { shape, rate }, MixingMeasure::Nig { tau, .. }) = (mode, state.measure) else {
        return;
    };
    let (a, b) = alpha_full_conditional(state.k(), nig_psi(state.u, tau), shape, rate);
    let alpha = Gamma::new(a, 1.0 / b).expect("positive gamma parameters").sample(rng);
    state.measure = MixingMeasure::Nig { alpha, tau };
}

fn total_log_lik(model: &Model<'_>, state: &SamplerState, theta_common: &[f64]) -> f64 {
    state
        .alloc
        .iter()
        .enumerate()
        .map(|(i, &c)| model.obs_log_lik(i, &state.clusters[c].params, theta_common))
        .sum()
}

/// Coordinate-wise random-walk updates of the shared coefficients against
/// `N(0, prior_var)` priors and the full censored likelihood.
pub fn update_theta_common<R: Rng + ?Sized>(
    model: &Model<'_>,
    state: &mut SamplerState,
    prior_var: f64,
    step: f64,
    rng: &mut R,
) -> Vec<MhOutcome> {
    let mut outcomes = Vec::with_capacity(state.theta_common.len());
    let mut current_ll = total_log_lik(model, state, &state.theta_common);
    for l in 0..state.theta_common.len() {
        let mut proposal = state.theta_common.clone();
        proposal[l] += step / model.covariate_sd[l] * std_normal(rng);
        let prop_ll = total_log_lik(model, state, &proposal);
        let log_prior = |t: f64| -0.5 * t * t / prior_var;
        let log_ratio = prop_ll - current_ll + log_prior(proposal[l]) - log_prior(state.theta_common[l]);
        let accepted = accept(log_ratio, rng);
        if accepted {
            state.theta_common = proposal;
            current_ll = prop_ll;
        }
        outcomes.push(MhOutcome { accepted, log_ratio });
    }
    outcomes
}

/// Log reshuffle target of cluster parameters `params` with members
/// `members`, in `(mu, theta, ln zeta)` coordinates.
pub fn log_target_cluster(model: &Model<'_>, state: &SamplerState, members: &[usize], params: &ClusterParams) -> f64 {
    let mut l = model.base.log_density(params) + params.zeta.ln();
    for &i in members {
        l += model.obs_log_lik(i, params, &state.theta_common);
    }
    l
}

/// Acceptance counts of one reshuffle sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReshuffleStats {
    pub location_accepted: usize,
    pub scale_accepted: usize,
    pub clusters: usize,
}

/// Metropolis refresh of every cluster's parameters: a joint normal move of
/// location and coefficients, then a normal move of the log scale. Both
/// proposal scales shrink with the square root of the cluster size.
pub fn reshuffle_clusters<R: Rng + ?Sized>(
    model: &Model<'_>,
    state: &mut SamplerState,
    step_location: f64,
    step_scale: f64,
    rng: &mut R,
) -> ReshuffleStats {
    let members = state.members();
    let mut stats = ReshuffleStats { clusters: members.len(), ..Default::default() };
    for (j, idx) in members.iter().enumerate() {
        let shrink = (idx.len() as f64).sqrt();
        let current = state.clusters[j].params.clone();
        let current_lt = log_target_cluster(model, state, idx, &current);

        let mut prop = current.clone();
        let s = step_location / shrink;
        prop.mu += s * std_normal(rng);
        for (l, t) in prop.theta.iter_mut().enumerate() {
            *t += s / model.covariate_sd[l] * std_normal(rng);
        }
        let prop_lt = log_target_cluster(model, state, idx, &prop);
        let (mut cur, mut cur_lt) = (current, current_lt);
        if accept(prop_lt - cur_lt, rng) {
            cur = prop;
            cur_lt = prop_lt;
            stats.location_accepted += 1;
        }

        let mut prop = cur.clone();
        prop.zeta = cur.zeta * (step_scale / shrink * std_normal(rng)).exp();
        if prop.zeta > 0.0 && prop.zeta.is_finite() {
            let prop_lt = log_target_cluster(model, state, idx, &prop);
            if accept(prop_lt - cur_lt, rng) {
                cur = prop;
                stats.scale_accepted += 1;
            }
        }
        state.clusters[j].params = cur;
    }
    stats
}
