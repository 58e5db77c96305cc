//! Posterior summaries, survival prediction, and the metrics used to compare
//! fits: Brier scores against a Kaplan-Meier reference, scaled coefficient
//! RMSE and selection rates.

pub mod metrics;
pub mod predict;
pub mod summary;
pub mod survival;

pub use metrics::{scaled_rmse, selection_metrics, SelectionMetrics};
pub use predict::{predict_survival, survival_curves, Aggregation, PredictionCurve, PredictionMode};
pub use summary::{summarize, summarize_chains, IndicatorSummary, ParameterSummary, PosteriorSummary};
pub use survival::{brier_score, integrated_brier, kaplan_meier, time_grid, BrierPoint, KaplanMeier};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::types::ParameterState;

/// Coefficient recovery of a fit against the generating state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub beta_rmse: f64,
    pub zeta_rmse: Option<f64>,
    pub gamma: Option<SelectionMetrics>,
    pub eta: Option<SelectionMetrics>,
}

/// Scaled RMSE of the posterior means and MPM selection rates, with truth
/// positives taken as the nonzero true coefficients.
pub fn recovery(summary: &PosteriorSummary, truth: &ParameterState) -> Result<RecoveryReport> {
    let beta_true = truth.beta_flat();
    let zeta_true = truth.zeta_flat();
    let nonzero = |v: &[f64]| v.iter().map(|&x| x != 0.0).collect::<Vec<_>>();
    let zeta_mean = summary.zeta_mean();
    Ok(RecoveryReport {
        beta_rmse: scaled_rmse(&summary.beta_mean(), &beta_true)?,
        zeta_rmse: if zeta_mean.is_empty() {
            None
        } else {
            Some(scaled_rmse(&zeta_mean, &zeta_true)?)
        },
        gamma: summary
            .gamma_mask()
            .map(|m| selection_metrics(&m, &nonzero(&beta_true)))
            .transpose()?,
        eta: summary
            .eta_mask()
            .map(|m| selection_metrics(&m, &nonzero(&zeta_true)))
            .transpose()?,
    })
}
