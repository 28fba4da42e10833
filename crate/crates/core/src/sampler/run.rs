use std::collections::BTreeMap;

use rand::Rng;

use super::state::{Model, SamplerState};
use super::updates::{reshuffle_clusters, update_allocation, update_alpha, update_tau, update_theta_common, update_u};
use super::{Chain, Draw, ModelVariant, SamplerConfig, StepSizes, TauMode};
use crate::error::{Error, Result};
use crate::kernels::{ClusterParams, Dataset, KernelFamily};
use crate::mixing::MixingMeasure;
use crate::rng::{derive_rng, StreamRng};

const ADAPT_BATCH: usize = 50;

#[derive(Debug, Clone, Default)]
struct Counter {
    accepted: usize,
    tried: usize,
}

impl Counter {
    fn rate(&self) -> Option<f64> {
        (self.tried > 0).then(|| self.accepted as f64 / self.tried as f64)
    }
}

#[derive(Debug, Clone, Default)]
struct Acceptance {
    batch: BTreeMap<&'static str, Counter>,
    retained: BTreeMap<&'static str, Counter>,
}

impl Acceptance {
    fn record(&mut self, key: &'static str, accepted: bool, burning: bool) {
        self.record_many(key, usize::from(accepted), 1, burning);
    }

    fn record_many(&mut self, key: &'static str, accepted: usize, tried: usize, burning: bool) {
        let map = if burning { &mut self.batch } else { &mut self.retained };
        let c = map.entry(key).or_default();
        c.accepted += accepted;
        c.tried += tried;
    }
}

/// A sampler run in progress: model, state and adaptive proposal scales.
pub struct Sampler<'a> {
    pub model: Model<'a>,
    pub state: SamplerState,
    pub config: SamplerConfig,
    pub steps: StepSizes,
    rng: StreamRng,
    acceptance: Acceptance,
    adapt_round: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(
        data: &'a Dataset,
        variant: ModelVariant,
        family: KernelFamily,
        measure: MixingMeasure,
        config: &SamplerConfig,
    ) -> Result<Self> {
        config.validate()?;
        measure.validate()?;
        if data.is_empty() {
            return Err(Error::Domain("dataset is empty".into()));
        }
        if variant != ModelVariant::M0 && data.p() == 0 {
            return Err(Error::Config(format!("model {variant} needs at least one covariate")));
        }
        let base = config.base.resolve(data, variant)?;
        let model = Model::new(data, variant, family, base, config.likelihood);
        let n = data.n();
        let p0 = ClusterParams {
            mu: model.base.mu0[0],
            theta: vec![0.0; model.base.n_theta()],
            zeta: data.var_y().sqrt().max(1e-3),
        };
        let theta_common = if variant == ModelVariant::M1 { vec![0.0; data.p()] } else { vec![] };
        let state = SamplerState::single_cluster(n, p0, n as f64, measure, theta_common);
        Ok(Self {
            model,
            state,
            steps: config.steps,
            config: config.clone(),
            rng: derive_rng(config.seed, config.stream),
            acceptance: Acceptance::default(),
            adapt_round: 0,
        })
    }

    /// One full sweep: allocations, reshuffle, u, tau, alpha, common
    /// coefficients.
    pub fn sweep(&mut self, burning: bool) -> Result<()> {
        let n = self.state.n();
        for i in 0..n {
            update_allocation(&self.model, &mut self.state, i, self.config.r_aux, &mut self.rng)?;
        }
        let rs = reshuffle_clusters(
            &self.model,
            &mut self.state,
            self.steps.reshuffle,
            self.steps.reshuffle_scale,
            &mut self.rng,
        );
        self.acceptance
            .record_many("reshuffle_location", rs.location_accepted, rs.clusters, burning);
        self.acceptance
            .record_many("reshuffle_scale", rs.scale_accepted, rs.clusters, burning);
        if self.state.measure.is_nig() {
            let out = update_u(&mut self.state, self.steps.u, &mut self.rng);
            self.acceptance.record("u", out.accepted, burning);
            if let TauMode::GammaPrior { shape, rate } = self.config.tau_mode {
                let out = update_tau(&mut self.state, shape, rate, self.steps.tau, &mut self.rng);
                self.acceptance.record("tau", out.accepted, burning);
            }
            update_alpha(&mut self.state, self.config.alpha_mode, &mut self.rng);
        }
        if self.model.variant == ModelVariant::M1 {
            for out in update_theta_common(
                &self.model,
                &mut self.state,
                self.config.theta_prior_var,
                self.steps.theta,
                &mut self.rng,
            ) {
                self.acceptance.record("theta", out.accepted, burning);
            }
        }
        Ok(())
    }

    fn adapt(&mut self) {
        self.adapt_round += 1;
        let gain = 1.0 / (self.adapt_round as f64).sqrt().max(1.0);
        let target = self.config.target_accept;
        let batch = std::mem::take(&mut self.acceptance.batch);
        for (key, c) in batch {
            let Some(rate) = c.rate() else { continue };
            let step = match key {
                "u" => &mut self.steps.u,
                "tau" => &mut self.steps.tau,
                "reshuffle_location" => &mut self.steps.reshuffle,
                "reshuffle_scale" => &mut self.steps.reshuffle_scale,
                "theta" => &mut self.steps.theta,
                _ => continue,
            };
            *step = (*step * ((rate - target) * 2.0 * gain).exp()).clamp(1e-6, 50.0);
        }
    }

    fn snapshot(&self, iter: usize) -> Draw {
        let s = &self.state;
        let loglik = if self.config.record_loglik {
            s.alloc
                .iter()
                .enumerate()
                .map(|(i, &c)| self.model.obs_log_lik(i, &s.clusters[c].params, &s.theta_common))
                .collect()
        } else {
            Vec::new()
        };
        Draw {
            iter,
            alloc: s.alloc.clone(),
            clusters: s.clusters.iter().map(|c| c.params.clone()).collect(),
            u: s.measure.is_nig().then_some(s.u),
            measure: s.measure,
            theta_common: s.theta_common.clone(),
            loglik,
        }
    }

    pub fn run(mut self) -> Result<Chain> {
        let cfg = self.config.clone();
        let mut draws = Vec::with_capacity((cfg.iters - cfg.burnin) / cfg.thin + 1);
        for iter in 1..=cfg.iters {
            let burning = iter <= cfg.burnin;
            self.sweep(burning)?;
            if burning {
                if cfg.adapt && iter % ADAPT_BATCH == 0 {
                    self.adapt();
                }
            } else if (iter - cfg.burnin).is_multiple_of(cfg.thin) {
                draws.push(self.snapshot(iter));
            }
        }
        debug_assert!(self.state.check_invariants().is_ok());
        let accept_rates = self
            .acceptance
            .retained
            .iter()
            .filter_map(|(k, c)| c.rate().map(|r| (k.to_string(), r)))
            .collect();
        Ok(Chain {
            variant: self.model.variant,
            family: self.model.family,
            base: self.model.base.clone(),
            n: self.model.data.n(),
            p: self.model.data.p(),
            draws,
            accept_rates,
            steps: self.steps,
        })
    }

    pub fn rng(&mut self) -> &mut impl Rng {
        &mut self.rng
    }
}

/// Runs the sampler for `config.iters` sweeps and returns the thinned
/// post-burn-in draws. Deterministic given `config.seed` and
/// `config.stream`.
pub fn run(
    data: &Dataset,
    variant: ModelVariant,
    family: KernelFamily,
    measure: MixingMeasure,
    config: &SamplerConfig,
) -> Result<Chain> {
    Sampler::new(data, variant, family, measure, config)?.run()
}
