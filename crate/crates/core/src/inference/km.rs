use serde::Serialize;

use crate::error::{Error, Result};

/// Product-limit survival estimate: a right-continuous step function that
/// drops at each distinct exact event time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KaplanMeier {
    /// Distinct event times, ascending.
    pub times: Vec<f64>,
    /// Survival on `[times[j], times[j + 1])`.
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
}

impl KaplanMeier {
    pub fn eval(&self, t: f64) -> f64 {
        let j = self.times.partition_point(|&s| s <= t);
        if j == 0 {
            1.0
        } else {
            self.survival[j - 1]
        }
    }
}

/// Kaplan-Meier estimate from times and exact-event indicators. A
/// censoring tied with an event time counts as at risk at that time.
pub fn kaplan_meier(times: &[f64], exact: &[bool]) -> Result<KaplanMeier> {
    if times.len() != exact.len() {
        return Err(Error::Domain("times and indicators differ in length".into()));
    }
    if let Some(t) = times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::Domain(format!("times must be positive and finite, got {t}")));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let mut km = KaplanMeier { times: vec![], survival: vec![], at_risk: vec![], events: vec![] };
    let mut s = 1.0;
    let mut remaining = times.len();
    let mut idx = 0;
    while idx < order.len() {
        let t = times[order[idx]];
        let mut end = idx;
        let mut d = 0;
        while end < order.len() && times[order[end]] == t {
            d += usize::from(exact[order[end]]);
            end += 1;
        }
        if d > 0 {
            s *= 1.0 - d as f64 / remaining as f64;
            km.times.push(t);
            km.survival.push(s);
            km.at_risk.push(remaining);
            km.events.push(d);
        }
        remaining -= end - idx;
        idx = end;
    }
    Ok(km)
}
