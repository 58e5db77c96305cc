use serde::{Deserialize, Serialize};

use super::chain::run_chain;
use super::diagnostics::{effective_sample_size, split_rhat, ScalarDiagnostic};
use super::output::ChainOutput;
use super::RunConfig;
use crate::error::{GptcmError, Result};
use crate::model::types::{ModelSpec, SurvivalDataset};

/// Output of a multi-chain fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub config: RunConfig,
    /// Successful chains in chain-id order.
    pub chains: Vec<ChainOutput>,
    /// (chain id, error message) of failed chains.
    pub failures: Vec<(usize, String)>,
    pub convergence: Vec<ScalarDiagnostic>,
    /// True when at least two chains are bitwise identical.
    pub identical_chains: bool,
    /// False when any chain failed.
    pub complete: bool,
}

impl FitResult {
    /// Draws of one scalar pooled across chains.
    pub fn pooled(&self, label: &str) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        for c in &self.chains {
            out.extend(c.scalar(label)?);
        }
        Some(out)
    }

    pub fn total_draws(&self) -> usize {
        self.chains.iter().map(|c| c.n_draws()).sum()
    }

    pub fn diagnostic(&self, label: &str) -> Option<&ScalarDiagnostic> {
        self.convergence.iter().find(|d| d.name == label)
    }
}

/// Runs `cfg.n_chains` chains. Chains run on `threads` worker threads (all
/// available cores when `None`); results do not depend on the thread count.
pub fn run_fit(spec: &ModelSpec, data: &SurvivalDataset, cfg: &RunConfig, threads: Option<usize>) -> Result<FitResult> {
    cfg.validate()?;
    spec.validate()?;
    data.validate()?;
    spec.check_data(data)?;
    let results = run_all(spec, data, cfg, threads)?;
    let mut chains = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => chains.push(c),
            Err(e) if e.is_input_error() && !matches!(e, GptcmError::Contract(_)) => return Err(e),
            Err(e) => failures.push((id, e.to_string())),
        }
    }
    let identical_chains = chains
        .iter()
        .enumerate()
        .any(|(i, a)| chains[i + 1..].iter().any(|b| a.traces == b.traces));
    let convergence = if chains.is_empty() { Vec::new() } else { diagnostics(&chains, identical_chains) };
    Ok(FitResult {
        spec: spec.clone(),
        config: cfg.clone(),
        complete: failures.is_empty(),
        chains,
        failures,
        convergence,
        identical_chains,
    })
}

fn diagnostics(chains: &[ChainOutput], identical: bool) -> Vec<ScalarDiagnostic> {
    let mut out = Vec::new();
    for (b, trace) in chains[0].traces.iter().enumerate() {
        if matches!(trace.name.as_str(), "gamma" | "eta") {
            continue;
        }
        for (k, name) in trace.columns.iter().enumerate() {
            let cols: Vec<Vec<f64>> = chains.iter().map(|c| c.traces[b].column(k)).collect();
            let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            let rhat = if identical { None } else { split_rhat(&refs) };
            out.push(ScalarDiagnostic {
                name: name.clone(),
                rhat,
                ess: effective_sample_size(&refs),
            });
        }
    }
    out
}

#[cfg(feature = "parallel")]
fn run_all(
    spec: &ModelSpec,
    data: &SurvivalDataset,
    cfg: &RunConfig,
    threads: Option<usize>,
) -> Result<Vec<Result<ChainOutput>>> {
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| GptcmError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        (0..cfg.n_chains)
            .into_par_iter()
            .map(|id| run_chain(spec, data, cfg, id))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn run_all(
    spec: &ModelSpec,
    data: &SurvivalDataset,
    cfg: &RunConfig,
    _threads: Option<usize>,
) -> Result<Vec<Result<ChainOutput>>> {
    Ok((0..cfg.n_chains).map(|id| run_chain(spec, data, cfg, id)).collect())
}
