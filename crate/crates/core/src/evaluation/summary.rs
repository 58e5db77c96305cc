use serde::{Deserialize, Serialize};

use crate::error::{GptcmError, Result};
use crate::mcmc::{state_from_blocks, ChainOutput, FitResult};
use crate::model::types::{ParameterState, Selection, Variant};

/// Fewest pooled draws [`summarize`] accepts.
pub const MIN_DRAWS: usize = 100;

/// Default inclusion threshold of the median probability model.
pub const MPM_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// Equal-tailed 95% credible interval.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSummary {
    /// Label of the indicator, e.g. `gamma[3,1]`.
    pub name: String,
    /// Marginal posterior inclusion probability.
    pub mpip: f64,
    pub selected: bool,
    /// Mean of the coefficient over draws where the indicator is 1, or 0
    /// when it never is.
    pub conditional_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub variant: Variant,
    pub d: usize,
    pub p: Vec<usize>,
    pub n_draws: usize,
    pub parameters: Vec<ParameterSummary>,
    /// γ then η (when sampled), in storage order.
    pub indicators: Vec<IndicatorSummary>,
    pub clamp_events: usize,
    pub incidents: usize,
}

/// Linearly interpolated quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize_values(name: &str, xs: &[f64]) -> ParameterSummary {
    let n = xs.len() as f64;
    // shifting by the first draw keeps constant chains exact
    let mean = xs[0] + xs.iter().map(|x| x - xs[0]).sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    ParameterSummary {
        name: name.to_string(),
        mean,
        sd: var.sqrt(),
        lower: quantile(&sorted, 0.025),
        upper: quantile(&sorted, 0.975),
    }
}

fn pooled_block(chains: &[ChainOutput], block: &str) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let first = chains.first()?.trace(block)?;
    let mut cols = vec![Vec::new(); first.width()];
    for c in chains {
        let t = c.trace(block)?;
        for (k, col) in cols.iter_mut().enumerate() {
            col.extend(t.column(k));
        }
    }
    Some((first.columns.clone(), cols))
}

/// Posterior summary of a multi-chain fit, pooling all chains.
pub fn summarize(fit: &FitResult) -> Result<PosteriorSummary> {
    summarize_chains(&fit.chains, MPM_THRESHOLD)
}

/// Pools the given chains; indicators with mPIP ≥ `threshold` enter the
/// median probability model.
pub fn summarize_chains(chains: &[ChainOutput], threshold: f64) -> Result<PosteriorSummary> {
    let first = chains
        .first()
        .ok_or_else(|| GptcmError::Contract("no chains to summarize".into()))?;
    let n_draws: usize = chains.iter().map(|c| c.n_draws()).sum();
    if n_draws == 0 {
        return Err(GptcmError::Contract("chain has no recorded draws".into()));
    }
    if n_draws < MIN_DRAWS {
        return Err(GptcmError::Contract(format!(
            "{n_draws} recorded draws; summaries need at least {MIN_DRAWS}"
        )));
    }
    if chains.iter().any(|c| c.variant != first.variant || c.p != first.p || c.d != first.d) {
        return Err(GptcmError::Contract("chains disagree on variant or dimensions".into()));
    }
    let mut parameters = Vec::new();
    for t in &first.traces {
        if matches!(t.name.as_str(), "gamma" | "eta") {
            continue;
        }
        let (names, cols) = pooled_block(chains, &t.name).expect("block present in the first chain");
        for (name, col) in names.iter().zip(&cols) {
            parameters.push(summarize_values(name, col));
        }
    }
    let mut indicators = Vec::new();
    for (flag, coef) in [("gamma", "beta"), ("eta", "zeta")] {
        let Some((names, flags)) = pooled_block(chains, flag) else {
            continue;
        };
        let (_, coefs) = pooled_block(chains, coef).expect("coefficients stored with their indicators");
        for ((name, g), b) in names.iter().zip(&flags).zip(&coefs) {
            let active = g.iter().filter(|&&x| x != 0.0).count();
            let mpip = active as f64 / g.len() as f64;
            let conditional_mean = if active == 0 {
                0.0
            } else {
                g.iter().zip(b).filter(|(&x, _)| x != 0.0).map(|(_, v)| v).sum::<f64>() / active as f64
            };
            indicators.push(IndicatorSummary {
                name: name.clone(),
                mpip,
                selected: mpip >= threshold,
                conditional_mean,
            });
        }
    }
    Ok(PosteriorSummary {
        variant: first.variant,
        d: first.d,
        p: first.p.clone(),
        n_draws,
        parameters,
        indicators,
        clamp_events: chains.iter().map(|c| c.clamp_events).sum(),
        incidents: chains.iter().map(|c| c.incidents.len()).sum(),
    })
}

impl PosteriorSummary {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn indicator(&self, name: &str) -> Option<&IndicatorSummary> {
        self.indicators.iter().find(|p| p.name == name)
    }

    fn block_means(&self, block: &str) -> Option<Vec<f64>> {
        let prefix = format!("{block}[");
        let vals: Vec<f64> = self
            .parameters
            .iter()
            .filter(|p| p.name == block || p.name.starts_with(&prefix))
            .map(|p| p.mean)
            .collect();
        (!vals.is_empty()).then_some(vals)
    }

    fn block_indicators(&self, block: &str) -> Option<Vec<&IndicatorSummary>> {
        let prefix = format!("{block}[");
        let vals: Vec<&IndicatorSummary> = self.indicators.iter().filter(|p| p.name.starts_with(&prefix)).collect();
        (!vals.is_empty()).then_some(vals)
    }

    /// Stacked posterior means of β (storage order β₁₁, β₂₁, …, β_pL).
    pub fn beta_mean(&self) -> Vec<f64> {
        self.block_means("beta").unwrap_or_default()
    }

    /// Stacked posterior means of ζ; empty for variants without the
    /// Dirichlet regression.
    pub fn zeta_mean(&self) -> Vec<f64> {
        self.block_means("zeta").unwrap_or_default()
    }

    /// MPM mask of γ, or `None` for variants without selection.
    pub fn gamma_mask(&self) -> Option<Vec<bool>> {
        self.block_indicators("gamma").map(|v| v.iter().map(|i| i.selected).collect())
    }

    pub fn eta_mask(&self) -> Option<Vec<bool>> {
        self.block_indicators("eta").map(|v| v.iter().map(|i| i.selected).collect())
    }

    pub fn gamma_mpip(&self) -> Option<Vec<f64>> {
        self.block_indicators("gamma").map(|v| v.iter().map(|i| i.mpip).collect())
    }

    pub fn eta_mpip(&self) -> Option<Vec<f64>> {
        self.block_indicators("eta").map(|v| v.iter().map(|i| i.mpip).collect())
    }

    /// Plug-in state with every parameter at its posterior mean. Indicators
    /// are set to the MPM mask (all ones without selection).
    pub fn posterior_mean_state(&self) -> ParameterState {
        let mut s = state_from_blocks(self.d, &self.p, |b| self.block_means(b));
        if let Some(m) = self.gamma_mask() {
            s.gamma = unflatten(&m, &self.p);
        }
        if let Some(m) = self.eta_mask() {
            s.eta = unflatten(&m, &self.p);
        }
        s
    }

    /// Plug-in state of the median probability model: coefficients outside
    /// the MPM are zero, selected ones take their mean over the draws in
    /// which they were active; everything else is at its posterior mean.
    /// Without selection this equals [`Self::posterior_mean_state`].
    pub fn mpm_state(&self) -> ParameterState {
        let mut s = self.posterior_mean_state();
        if self.variant.selection() == Selection::None {
            return s;
        }
        for (flag, target) in [("gamma", &mut s.beta), ("eta", &mut s.zeta)] {
            if let Some(ind) = self.block_indicators(flag) {
                let flat: Vec<f64> = ind
                    .iter()
                    .map(|i| if i.selected { i.conditional_mean } else { 0.0 })
                    .collect();
                *target = unflatten(&flat, &self.p);
            }
        }
        s
    }
}

fn unflatten<T: Copy>(flat: &[T], p: &[usize]) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(p.len());
    let mut k = 0;
    for &pl in p {
        out.push(flat[k..k + pl].to_vec());
        k += pl;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let xs: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(quantile(&xs, 0.025), 2.5);
        assert_eq!(quantile(&xs, 0.975), 97.5);
        assert_eq!(quantile(&[4.0], 0.3), 4.0);
    }
}
