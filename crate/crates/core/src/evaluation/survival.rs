use serde::{Deserialize, Serialize};

use super::predict::PredictionCurve;
use crate::error::{GptcmError, Result};

/// Product-limit estimate as a right-continuous step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KaplanMeier {
    /// Distinct event times, increasing.
    pub times: Vec<f64>,
    /// Survival just after each entry of `times`.
    pub survival: Vec<f64>,
}

impl KaplanMeier {
    /// Estimate of `P(T > t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            1.0
        } else {
            self.survival[k - 1]
        }
    }

    /// Left limit `P(T ≥ t)`.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            1.0
        } else {
            self.survival[k - 1]
        }
    }
}

/// Kaplan-Meier estimator of the survival function of `time`, with
/// `event[i] = false` marking right censoring. Censorings tied with an
/// event time count as still at risk at that time.
pub fn kaplan_meier(time: &[f64], event: &[bool]) -> Result<KaplanMeier> {
    if time.len() != event.len() {
        return Err(GptcmError::Dimension(format!(
            "{} times but {} event indicators",
            time.len(),
            event.len()
        )));
    }
    if let Some(t) = time.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(GptcmError::Domain(format!("invalid survival time {t}")));
    }
    let mut order: Vec<usize> = (0..time.len()).collect();
    order.sort_by(|&a, &b| time[a].total_cmp(&time[b]));
    let mut at_risk = time.len();
    let mut s = 1.0;
    let mut out = KaplanMeier {
        times: Vec::new(),
        survival: Vec::new(),
    };
    let mut k = 0;
    while k < order.len() {
        let t = time[order[k]];
        let mut deaths = 0;
        let mut leaving = 0;
        while k < order.len() && time[order[k]] == t {
            if event[order[k]] {
                deaths += 1;
            }
            leaving += 1;
            k += 1;
        }
        if deaths > 0 {
            s *= 1.0 - deaths as f64 / at_risk as f64;
            out.times.push(t);
            out.survival.push(s);
        }
        at_risk -= leaving;
    }
    Ok(out)
}

/// Brier score at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrierPoint {
    pub time: f64,
    /// `None` when the censoring weights are undefined at this time.
    pub score: Option<f64>,
    /// False past the last observed validation time or where the
    /// censoring survival estimate is zero.
    pub reliable: bool,
}

/// Inverse-probability-of-censoring-weighted Brier score of `pred` on
/// `(time, event)`, with the censoring distribution estimated by
/// Kaplan-Meier on the same data:
///
/// `BS(t) = n⁻¹ Σ_i [ 𝟙{T_i ≤ t, δ_i = 1} Ŝ_i(t)² / Ĝ(T_i−)
///                  + 𝟙{T_i > t} (1 − Ŝ_i(t))² / Ĝ(t) ]`.
pub fn brier_score(pred: &PredictionCurve, time: &[f64], event: &[bool]) -> Result<Vec<BrierPoint>> {
    let n = time.len();
    if pred.survival.len() != n {
        return Err(GptcmError::Dimension(format!(
            "prediction has {} subjects, data have {n}",
            pred.survival.len()
        )));
    }
    if n == 0 {
        return Err(GptcmError::Dimension("no subjects to score".into()));
    }
    let censored: Vec<bool> = event.iter().map(|e| !e).collect();
    let g = kaplan_meier(time, &censored)?;
    let last = time.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::with_capacity(pred.times.len());
    for (k, &t) in pred.times.iter().enumerate() {
        let gt = g.eval(t);
        let mut total = 0.0;
        let mut defined = gt > 0.0;
        for i in 0..n {
            let s = pred.survival[i][k];
            if time[i] > t {
                total += (1.0 - s).powi(2) / gt;
            } else if event[i] {
                let gi = g.eval_left(time[i]);
                if gi > 0.0 {
                    total += s * s / gi;
                } else {
                    defined = false;
                }
            }
        }
        out.push(BrierPoint {
            time: t,
            score: defined.then_some(total / n as f64),
            reliable: defined && t <= last,
        });
    }
    Ok(out)
}

/// Trapezoidal integral of the Brier curve divided by the grid span.
/// Returns `None` if any point is undefined or the grid has fewer than two
/// points.
pub fn integrated_brier(points: &[BrierPoint]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let mut area = 0.0;
    for w in points.windows(2) {
        area += 0.5 * (w[0].score? + w[1].score?) * (w[1].time - w[0].time);
    }
    let span = points[points.len() - 1].time - points[0].time;
    (span > 0.0).then(|| area / span)
}

/// `n_points` equally spaced times from 0 to the `quantile` (e.g. 0.8) of
/// the observed times.
pub fn time_grid(time: &[f64], quantile: f64, n_points: usize) -> Result<Vec<f64>> {
    if time.is_empty() || n_points < 2 || !(quantile > 0.0 && quantile <= 1.0) {
        return Err(GptcmError::Config(
            "time grid needs data, at least two points and a quantile in (0, 1]".into(),
        ));
    }
    let mut sorted = time.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let h = quantile * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let end = sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]);
    Ok((0..n_points).map(|k| end * k as f64 / (n_points - 1) as f64).collect())
}
