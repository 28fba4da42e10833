//! Inference from sampler output: predictive survival curves, stratum
//! refits, LPML/WAIC, Kaplan-Meier and Weibull maximum likelihood
//! comparators, and convergence diagnostics.

mod curves;
mod diagnostics;
mod km;
mod mle;
mod refit;
mod scores;

pub use curves::{predictive_survival, CurveOptions, SurvivalCurve};
pub use diagnostics::{acf, diagnostics, geweke, Diagnostics, GEWEKE_MIN_LEN};
pub use km::{kaplan_meier, KaplanMeier};
pub use mle::{weibull_log_lik, weibull_mle, WeibullFit};
pub use refit::{stratum_refit, summarize, ParameterSummary, Refit, StratumFit};
pub use scores::{fit_scores, log_cpo, lpml, lpml_loglik, waic, waic_loglik, FitScores, VarianceConvention};

/// Linear-interpolation quantile of sorted values (`q` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
