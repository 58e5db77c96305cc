use serde::{Deserialize, Serialize};

use crate::error::{GptcmError, Result};

/// Confusion-matrix rates of a selection mask. A rate whose denominator is
/// zero (no true positives, or no true negatives) is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

pub fn selection_metrics(mask: &[bool], truth: &[bool]) -> Result<SelectionMetrics> {
    if mask.len() != truth.len() {
        return Err(GptcmError::Dimension(format!(
            "mask has {} entries, truth has {}",
            mask.len(),
            truth.len()
        )));
    }
    if mask.is_empty() {
        return Err(GptcmError::Dimension("empty selection mask".into()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&m, &t) in mask.iter().zip(truth) {
        match (m, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let rate = |a: usize, b: usize| (a + b > 0).then(|| a as f64 / (a + b) as f64);
    Ok(SelectionMetrics {
        accuracy: (tp + tn) as f64 / mask.len() as f64,
        sensitivity: rate(tp, fn_),
        specificity: rate(tn, fp),
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
    })
}

/// `‖estimate − truth‖₂ / √len`.
pub fn scaled_rmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(GptcmError::Dimension(format!(
            "estimate has {} entries, truth has {}",
            estimate.len(),
            truth.len()
        )));
    }
    if estimate.is_empty() {
        return Err(GptcmError::Dimension("empty coefficient vector".into()));
    }
    let ss: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((ss / estimate.len() as f64).sqrt())
}
