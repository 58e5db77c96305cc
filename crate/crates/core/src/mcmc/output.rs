use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::types::{ParameterState, Variant};
use crate::samplers::SamplerDiagnostics;

/// Row-major draws of one parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub name: String,
    pub columns: Vec<String>,
    pub values: Vec<f64>,
}

impl Trace {
    pub fn new(name: &str, columns: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            columns,
            values: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        if self.columns.is_empty() {
            0
        } else {
            self.values.len() / self.columns.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.width());
        self.values.extend_from_slice(row);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        let w = self.width();
        self.values.iter().skip(k).step_by(w).copied().collect()
    }
}

/// Names of the stored blocks, in storage order.
pub const BLOCKS: [&str; 18] = [
    "loglik", "xi0", "xi", "v02", "v2", "kappa", "beta0", "beta", "gamma", "tau2", "tau02", "pi", "zeta0", "zeta",
    "eta", "w2", "w02", "rho",
];

fn labels(name: &str, p: &[usize], d: usize) -> Vec<String> {
    let l = p.len();
    let per_coef = || {
        p.iter()
            .enumerate()
            .flat_map(|(lt, &pl)| (0..pl).map(move |j| format!("{name}[{},{}]", j + 1, lt + 1)))
            .collect::<Vec<_>>()
    };
    match name {
        "xi" => (1..=d).map(|k| format!("xi[{k}]")).collect(),
        "beta0" | "zeta0" | "tau2" | "w2" => (1..=l).map(|k| format!("{name}[{k}]")).collect(),
        "beta" | "gamma" | "zeta" | "eta" | "pi" | "rho" => per_coef(),
        _ => vec![name.to_string()],
    }
}

/// Whether a block is sampled (and therefore stored) for a variant.
pub fn block_applies(name: &str, variant: Variant) -> bool {
    use crate::model::types::Selection;
    let me = variant.has_measurement_error();
    let sel = variant.selection();
    match name {
        "gamma" => sel != Selection::None,
        "pi" => sel == Selection::Bernoulli,
        "zeta0" | "zeta" | "w2" | "w02" => me,
        "eta" => me && sel != Selection::None,
        "rho" => me && sel == Selection::Bernoulli,
        _ => true,
    }
}

/// A recoverable numerical failure during one block update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incident {
    pub iteration: usize,
    pub block: String,
    pub message: String,
}

/// Stored output of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub chain_id: usize,
    pub variant: Variant,
    pub d: usize,
    pub p: Vec<usize>,
    /// 1-based sweep numbers of the stored draws (warmup included).
    pub iterations: Vec<usize>,
    pub traces: Vec<Trace>,
    /// Per-subject log-likelihood at each stored draw, if requested.
    pub pointwise: Option<Trace>,
    /// The first warmup draws, kept for diagnostics only.
    pub warmup_head: Vec<Trace>,
    pub diagnostics: BTreeMap<String, SamplerDiagnostics>,
    pub incidents: Vec<Incident>,
    pub clamp_events: usize,
    /// Logged step order of the first iterations.
    pub step_log: Vec<String>,
    pub final_state: ParameterState,
    /// Wall-clock seconds; reported only in the run manifest.
    #[serde(skip)]
    pub elapsed_secs: f64,
}

impl ChainOutput {
    pub(crate) fn empty_traces(variant: Variant, d: usize, p: &[usize]) -> Vec<Trace> {
        BLOCKS
            .iter()
            .filter(|b| block_applies(b, variant))
            .map(|b| Trace::new(b, labels(b, p, d)))
            .collect()
    }

    pub fn n_draws(&self) -> usize {
        self.iterations.len()
    }

    pub fn trace(&self, name: &str) -> Option<&Trace> {
        self.traces.iter().find(|t| t.name == name)
    }

    /// Draws of one scalar identified by its column label, e.g. `beta[3,1]`.
    pub fn scalar(&self, label: &str) -> Option<Vec<f64>> {
        self.traces.iter().find_map(|t| {
            t.columns.iter().position(|c| c == label).map(|k| t.column(k))
        })
    }

    /// Reconstructs the parameter state of stored draw `i`.
    pub fn state_at(&self, i: usize) -> ParameterState {
        state_from_blocks(self.d, &self.p, |name| self.trace(name).map(|t| t.row(i).to_vec()))
    }
}

/// Builds a state from flat per-block rows in storage layout; blocks for
/// which `get` returns `None` keep the values of [`ParameterState::zeros`].
/// Indicator rows are read as `x != 0`.
pub fn state_from_blocks(d: usize, p: &[usize], get: impl Fn(&str) -> Option<Vec<f64>>) -> ParameterState {
    let mut s = ParameterState::zeros(d, p);
    let split = |flat: Vec<f64>| {
        let mut out = Vec::new();
        let mut k = 0;
        for &pl in p {
            out.push(flat[k..k + pl].to_vec());
            k += pl;
        }
        out
    };
    let flags = |flat: Vec<f64>| split(flat).into_iter().map(|v| v.into_iter().map(|x| x != 0.0).collect()).collect();
    if let Some(v) = get("xi0") {
        s.xi0 = v[0];
    }
    if let Some(v) = get("xi") {
        s.xi = v;
    }
    if let Some(v) = get("v02") {
        s.v02 = v[0];
    }
    if let Some(v) = get("v2") {
        s.v2 = v[0];
    }
    if let Some(v) = get("kappa") {
        s.kappa = v[0];
    }
    if let Some(v) = get("beta0") {
        s.beta0 = v;
    }
    if let Some(v) = get("beta") {
        s.beta = split(v);
    }
    if let Some(v) = get("gamma") {
        s.gamma = flags(v);
    }
    if let Some(v) = get("tau2") {
        s.tau2 = v;
    }
    if let Some(v) = get("tau02") {
        s.tau02 = v[0];
    }
    if let Some(v) = get("pi") {
        s.pi = split(v);
    }
    if let Some(v) = get("zeta0") {
        s.zeta0 = v;
    }
    if let Some(v) = get("zeta") {
        s.zeta = split(v);
    }
    if let Some(v) = get("eta") {
        s.eta = flags(v);
    }
    if let Some(v) = get("w2") {
        s.w2 = v;
    }
    if let Some(v) = get("w02") {
        s.w02 = v[0];
    }
    if let Some(v) = get("rho") {
        s.rho = split(v);
    }
    s
}

/// Appends a state (and its log-likelihood) to a set of traces.
pub(crate) fn push_state(traces: &mut [Trace], s: &ParameterState, loglik: f64) {
    let b = |v: &[Vec<bool>]| v.iter().flatten().map(|&g| if g { 1.0 } else { 0.0 }).collect::<Vec<_>>();
    let f = |v: &[Vec<f64>]| v.iter().flatten().copied().collect::<Vec<_>>();
    for t in traces.iter_mut() {
        match t.name.as_str() {
            "loglik" => t.push(&[loglik]),
            "xi0" => t.push(&[s.xi0]),
            "xi" => t.push(&s.xi),
            "v02" => t.push(&[s.v02]),
            "v2" => t.push(&[s.v2]),
            "kappa" => t.push(&[s.kappa]),
            "beta0" => t.push(&s.beta0),
            "beta" => t.push(&f(&s.beta)),
            "gamma" => t.push(&b(&s.gamma)),
            "tau2" => t.push(&s.tau2),
            "tau02" => t.push(&[s.tau02]),
            "pi" => t.push(&f(&s.pi)),
            "zeta0" => t.push(&s.zeta0),
            "zeta" => t.push(&f(&s.zeta)),
            "eta" => t.push(&b(&s.eta)),
            "w2" => t.push(&s.w2),
            "w02" => t.push(&[s.w02]),
            "rho" => t.push(&f(&s.rho)),
            other => unreachable!("unknown block {other}"),
        }
    }
}
