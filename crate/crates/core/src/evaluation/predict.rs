use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::summary::PosteriorSummary;
use super::survival::KaplanMeier;
use crate::error::{GptcmError, Result};
use crate::mcmc::FitResult;
use crate::model::likelihood::linear_predictors;
use crate::model::types::{ParameterState, Selection, SurvivalDataset, Variant};

/// Largest number of stored draws averaged by [`PredictionMode::Drawwise`];
/// longer fits are thinned evenly.
pub const DRAWWISE_MAX: usize = 2000;

/// How parameters are turned into one survival curve per subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionMode {
    /// Median-probability-model coefficients, posterior means elsewhere.
    Mpm,
    /// Posterior means of every parameter.
    #[serde(rename = "nobvs")]
    PosteriorMean,
    /// Average of the curves implied by each stored draw.
    Drawwise,
}

impl PredictionMode {
    /// The plug-in rule used for a variant: MPM with selection, posterior
    /// means without.
    pub fn default_for(variant: Variant) -> Self {
        if variant.selection() == Selection::None {
            PredictionMode::PosteriorMean
        } else {
            PredictionMode::Mpm
        }
    }
}

impl FromStr for PredictionMode {
    type Err = GptcmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mpm" => Ok(PredictionMode::Mpm),
            "nobvs" | "mean" => Ok(PredictionMode::PosteriorMean),
            "drawwise" => Ok(PredictionMode::Drawwise),
            _ => Err(GptcmError::Config(format!(
                "unknown prediction mode '{s}' (expected mpm, nobvs or drawwise)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Curves from a single summarized parameter value.
    PlugIn,
    /// Mean of per-draw curves.
    DrawAverage,
    /// The same reference curve for every subject.
    Reference,
}

/// Predicted population survival of each subject on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionCurve {
    pub times: Vec<f64>,
    /// `survival[i][k]` is subject i's survival at `times[k]`.
    pub survival: Vec<Vec<f64>>,
    pub aggregation: Aggregation,
}

impl PredictionCurve {
    /// Every subject gets the Kaplan-Meier curve `km`.
    pub fn reference(km: &KaplanMeier, n: usize, times: &[f64]) -> Result<Self> {
        check_grid(times)?;
        let row: Vec<f64> = times.iter().map(|&t| km.eval(t)).collect();
        Ok(Self {
            times: times.to_vec(),
            survival: vec![row; n],
            aggregation: Aggregation::Reference,
        })
    }

    /// Checks that every curve is non-increasing and lies in [0, 1].
    pub fn check(&self) -> Result<()> {
        for (i, row) in self.survival.iter().enumerate() {
            if row.len() != self.times.len() {
                return Err(GptcmError::Dimension(format!(
                    "subject {i}: {} values for {} times",
                    row.len(),
                    self.times.len()
                )));
            }
            if row.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return Err(GptcmError::Contract(format!("subject {i}: survival outside [0, 1]")));
            }
            if row.windows(2).any(|w| w[1] > w[0]) {
                return Err(GptcmError::Contract(format!("subject {i}: survival curve increases")));
            }
        }
        Ok(())
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(GptcmError::Config("empty prediction grid".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(GptcmError::Config(
            "prediction grid must be finite, nonnegative and sorted".into(),
        ));
    }
    Ok(())
}

/// Population survival curves implied by one parameter state.
pub fn survival_curves(
    state: &ParameterState,
    variant: Variant,
    data: &SurvivalDataset,
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_grid(times)?;
    let dq = linear_predictors(state, data, variant.has_measurement_error())?;
    let big_l = data.n_types();
    let kappa = state.kappa;
    Ok((0..data.n())
        .map(|i| {
            times
                .iter()
                .map(|&t| {
                    let mass: f64 = (0..big_l)
                        .map(|l| {
                            let z = (t / dq.lambda[(i, l)]).powf(kappa);
                            dq.props[(i, l)] * -(-z).exp_m1()
                        })
                        .sum();
                    (-dq.theta[i] * mass).exp()
                })
                .collect()
        })
        .collect())
}

/// Survival curves for the subjects in `data` (their times and events are
/// ignored).
pub fn predict_survival(
    fit: &FitResult,
    summary: &PosteriorSummary,
    data: &SurvivalDataset,
    times: &[f64],
    mode: PredictionMode,
) -> Result<PredictionCurve> {
    let variant = fit.spec.variant;
    fit.spec.check_data(data)?;
    let curve = match mode {
        PredictionMode::Mpm | PredictionMode::PosteriorMean => {
            let state = if mode == PredictionMode::Mpm {
                summary.mpm_state()
            } else {
                summary.posterior_mean_state()
            };
            PredictionCurve {
                times: times.to_vec(),
                survival: survival_curves(&state, variant, data, times)?,
                aggregation: Aggregation::PlugIn,
            }
        }
        PredictionMode::Drawwise => {
            let total = fit.total_draws();
            if total == 0 {
                return Err(GptcmError::Contract("fit has no recorded draws".into()));
            }
            let keep = total.min(DRAWWISE_MAX);
            let mut acc = vec![vec![0.0; times.len()]; data.n()];
            let mut used = 0usize;
            let mut offset = 0usize;
            for chain in &fit.chains {
                for i in 0..chain.n_draws() {
                    let g = offset + i;
                    // evenly spaced subset of the pooled draws
                    if (g * keep) / total == ((g + 1) * keep) / total {
                        continue;
                    }
                    let curves = survival_curves(&chain.state_at(i), variant, data, times)?;
                    for (a, c) in acc.iter_mut().zip(&curves) {
                        for (x, y) in a.iter_mut().zip(c) {
                            *x += y;
                        }
                    }
                    used += 1;
                }
                offset += chain.n_draws();
            }
            for row in &mut acc {
                for x in row.iter_mut() {
                    *x /= used as f64;
                }
            }
            PredictionCurve {
                times: times.to_vec(),
                survival: acc,
                aggregation: Aggregation::DrawAverage,
            }
        }
    };
    curve.check()?;
    Ok(curve)
}
