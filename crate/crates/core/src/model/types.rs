use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GptcmError, Result};

/// Tolerance on the row sums of compositional data.
pub const SIMPLEX_TOL: f64 = 1e-8;

/// The six Bayesian model variants.
///
/// The `*1` variants treat the observed proportions as exact; the `*2`
/// variants add the Dirichlet measurement-error regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "noBVS1")]
    NoBvs1,
    #[serde(rename = "noBVS2")]
    NoBvs2,
    #[serde(rename = "Ber1")]
    Ber1,
    #[serde(rename = "Ber2")]
    Ber2,
    #[serde(rename = "MRF1")]
    Mrf1,
    #[serde(rename = "MRF2")]
    Mrf2,
}

/// Prior family on the selection indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// No variable selection: every coefficient is always active.
    None,
    /// Independent Bernoulli indicators with Beta hyperpriors.
    Bernoulli,
    /// Markov random field prior over the stacked indicator vector.
    Mrf,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::NoBvs1,
        Variant::NoBvs2,
        Variant::Ber1,
        Variant::Ber2,
        Variant::Mrf1,
        Variant::Mrf2,
    ];

    /// True for variants carrying the Dirichlet regression on proportions.
    pub fn has_measurement_error(self) -> bool {
        matches!(self, Variant::NoBvs2 | Variant::Ber2 | Variant::Mrf2)
    }

    pub fn selection(self) -> Selection {
        match self {
            Variant::NoBvs1 | Variant::NoBvs2 => Selection::None,
            Variant::Ber1 | Variant::Ber2 => Selection::Bernoulli,
            Variant::Mrf1 | Variant::Mrf2 => Selection::Mrf,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::NoBvs1 => "noBVS1",
            Variant::NoBvs2 => "noBVS2",
            Variant::Ber1 => "Ber1",
            Variant::Ber2 => "Ber2",
            Variant::Mrf1 => "MRF1",
            Variant::Mrf2 => "MRF2",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GPTCM-{}", self.name())
    }
}

impl FromStr for Variant {
    type Err = GptcmError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("gptcm-").unwrap_or(&key);
        Variant::ALL
            .into_iter()
            .find(|v| v.name().to_ascii_lowercase() == key)
            .ok_or_else(|| GptcmError::Config(format!("unknown variant '{s}'")))
    }
}

/// Fixed hyperparameters. Gamma and inverse-gamma pairs are (shape, rate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub a_kappa: f64,
    pub b_kappa: f64,
    pub a_v: f64,
    pub b_v: f64,
    pub a_v0: f64,
    pub b_v0: f64,
    pub a_tau: f64,
    pub b_tau: f64,
    pub a_tau0: f64,
    pub b_tau0: f64,
    pub a_w: f64,
    pub b_w: f64,
    pub a_w0: f64,
    pub b_w0: f64,
    pub a_pi: f64,
    /// `None` means `c * p_l`.
    pub b_pi: Option<f64>,
    pub a_rho: f64,
    /// `None` means `c * p_l`.
    pub b_rho: Option<f64>,
    pub c: f64,
    /// Target sparsity; MRF sparsity parameter defaults to `logit(s)`.
    pub s: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            a_kappa: 1.0,
            b_kappa: 1.0,
            a_v: 5.0,
            b_v: 20.0,
            a_v0: 5.0,
            b_v0: 20.0,
            a_tau: 5.0,
            b_tau: 20.0,
            a_tau0: 5.0,
            b_tau0: 20.0,
            a_w: 5.0,
            b_w: 20.0,
            a_w0: 5.0,
            b_w0: 20.0,
            a_pi: 1.0,
            b_pi: None,
            a_rho: 1.0,
            b_rho: None,
            c: 1.0,
            s: 0.1,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("a_kappa", self.a_kappa),
            ("b_kappa", self.b_kappa),
            ("a_v", self.a_v),
            ("b_v", self.b_v),
            ("a_v0", self.a_v0),
            ("b_v0", self.b_v0),
            ("a_tau", self.a_tau),
            ("b_tau", self.b_tau),
            ("a_tau0", self.a_tau0),
            ("b_tau0", self.b_tau0),
            ("a_w", self.a_w),
            ("b_w", self.b_w),
            ("a_w0", self.a_w0),
            ("b_w0", self.b_w0),
            ("a_pi", self.a_pi),
            ("a_rho", self.a_rho),
            ("c", self.c),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GptcmError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("b_pi", self.b_pi), ("b_rho", self.b_rho)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(GptcmError::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(GptcmError::Config(format!("s must lie in (0,1), got {}", self.s)));
        }
        Ok(())
    }

    pub fn b_pi_for(&self, p: usize) -> f64 {
        self.b_pi.unwrap_or(self.c * p as f64)
    }

    pub fn b_rho_for(&self, p: usize) -> f64 {
        self.b_rho.unwrap_or(self.c * p as f64)
    }

    /// `logit(s)`, the default MRF sparsity parameter.
    pub fn mrf_sparsity(&self) -> f64 {
        (self.s / (1.0 - self.s)).ln()
    }
}

/// Sparse symmetric weighted graph with the MRF scalars.
///
/// The quadratic form `γᵀGγ` sums over the full symmetric matrix, so every
/// undirected edge contributes twice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrfGraph {
    dim: usize,
    neighbors: Vec<Vec<(usize, f64)>>,
    pub a: f64,
    pub b: f64,
}

impl MrfGraph {
    /// Builds a graph from undirected edges `(i, j, weight)`.
    ///
    /// Each edge must be listed once; listing both orientations with the same
    /// weight is accepted and collapsed.
    pub fn new(dim: usize, edges: &[(usize, usize, f64)], a: f64, b: f64) -> Result<Self> {
        if !(b >= 0.0) || !b.is_finite() || !a.is_finite() {
            return Err(GptcmError::Config(format!("MRF requires finite a and b >= 0 (a={a}, b={b})")));
        }
        let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for &(i, j, w) in edges {
            if i >= dim || j >= dim {
                return Err(GptcmError::Dimension(format!("edge ({i},{j}) outside graph of size {dim}")));
            }
            if i == j {
                return Err(GptcmError::Config(format!("graph diagonal must be zero (node {i})")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(GptcmError::Config(format!("edge ({i},{j}) weight {w} outside [0,1]")));
            }
            if w == 0.0 {
                continue;
            }
            match neighbors[i].iter().find(|(k, _)| *k == j) {
                Some(&(_, existing)) if existing != w => {
                    return Err(GptcmError::Config(format!("graph not symmetric at ({i},{j})")));
                }
                Some(_) => continue,
                None => {
                    neighbors[i].push((j, w));
                    neighbors[j].push((i, w));
                }
            }
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(k, _)| k);
        }
        Ok(Self { dim, neighbors, a, b })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// Weight of edge (i, j), zero when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.neighbors[i]
            .iter()
            .find(|(k, _)| *k == j)
            .map_or(0.0, |&(_, w)| w)
    }

    /// Undirected edge list with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, list) in self.neighbors.iter().enumerate() {
            for &(j, w) in list {
                if i < j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// `γᵀGγ` over the full symmetric matrix.
    pub fn quadratic_form(&self, gamma: &[bool]) -> f64 {
        let mut total = 0.0;
        for (i, list) in self.neighbors.iter().enumerate() {
            if !gamma[i] {
                continue;
            }
            for &(j, w) in list {
                if gamma[j] {
                    total += w;
                }
            }
        }
        total
    }

    /// Change in the MRF log mass when indicator `k` flips from its current value.
    pub fn flip_delta(&self, gamma: &[bool], k: usize) -> f64 {
        let linked: f64 = self.neighbors[k]
            .iter()
            .filter(|&&(j, _)| gamma[j])
            .map(|&(_, w)| w)
            .sum();
        let gain = self.a + 2.0 * self.b * linked;
        if gamma[k] {
            -gain
        } else {
            gain
        }
    }

    /// Copy with different MRF scalars.
    pub fn with_scalars(&self, a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            ..self.clone()
        }
    }
}

/// Model variant plus hyperparameters and the optional graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub hyper: HyperParams,
    pub graph_beta: Option<MrfGraph>,
    pub graph_zeta: Option<MrfGraph>,
}

impl ModelSpec {
    /// Variant without graphs; valid for the noBVS and Ber variants.
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            hyper: HyperParams::default(),
            graph_beta: None,
            graph_zeta: None,
        }
    }

    pub fn with_hyper(mut self, hyper: HyperParams) -> Self {
        self.hyper = hyper;
        self
    }

    pub fn with_graphs(mut self, beta: Option<MrfGraph>, zeta: Option<MrfGraph>) -> Self {
        self.graph_beta = beta;
        self.graph_zeta = zeta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        let v = self.variant;
        match (v.selection(), v.has_measurement_error()) {
            (Selection::Mrf, me) => {
                if self.graph_beta.is_none() {
                    return Err(GptcmError::Config(format!("{v} requires an MRF graph for beta")));
                }
                if me && self.graph_zeta.is_none() {
                    return Err(GptcmError::Config(format!("{v} requires an MRF graph for zeta")));
                }
                if !me && self.graph_zeta.is_some() {
                    return Err(GptcmError::Config(format!("{v} has no zeta indicators; remove graph_zeta")));
                }
            }
            _ => {
                if self.graph_beta.is_some() || self.graph_zeta.is_some() {
                    return Err(GptcmError::Config(format!("{v} does not take MRF graphs")));
                }
            }
        }
        Ok(())
    }

    /// Dimension checks against a dataset.
    pub fn check_data(&self, data: &SurvivalDataset) -> Result<()> {
        let total: usize = data.cell_covariates.iter().map(|m| m.ncols()).sum();
        for (name, g) in [("graph_beta", &self.graph_beta), ("graph_zeta", &self.graph_zeta)] {
            if let Some(g) = g {
                if g.dim() != total {
                    return Err(GptcmError::Dimension(format!(
                        "{name} has dimension {} but the data carry {total} cell-type covariates",
                        g.dim()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Observed survival data with clinical covariates, cell-type covariate
/// blocks and measured cell-type proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    pub time: Vec<f64>,
    pub event: Vec<bool>,
    /// n × d clinical covariates.
    pub clinical: DMatrix<f64>,
    /// L blocks, each n × p_l.
    pub cell_covariates: Vec<DMatrix<f64>>,
    /// n × L observed compositions.
    pub proportions: DMatrix<f64>,
}

impl SurvivalDataset {
    /// Constructs and validates a dataset.
    pub fn new(
        time: Vec<f64>,
        event: Vec<bool>,
        clinical: DMatrix<f64>,
        cell_covariates: Vec<DMatrix<f64>>,
        proportions: DMatrix<f64>,
    ) -> Result<Self> {
        let ds = Self {
            time,
            event,
            clinical,
            cell_covariates,
            proportions,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.time.len()
    }

    pub fn d(&self) -> usize {
        self.clinical.ncols()
    }

    pub fn n_types(&self) -> usize {
        self.cell_covariates.len()
    }

    /// Covariate counts per cell type.
    pub fn p_per_type(&self) -> Vec<usize> {
        self.cell_covariates.iter().map(|m| m.ncols()).collect()
    }

    pub fn event_count(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let n = self.time.len();
        if n == 0 {
            errs.push("dataset has no subjects".to_string());
        }
        if self.event.len() != n {
            errs.push(format!("event has {} rows, expected {n}", self.event.len()));
        }
        for (i, &t) in self.time.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                errs.push(format!("time row {i}: {t} is not a positive finite value"));
            }
        }
        if self.clinical.nrows() != n {
            errs.push(format!("clinical has {} rows, expected {n}", self.clinical.nrows()));
        }
        check_finite(&self.clinical, "clinical", &mut errs);
        if self.cell_covariates.is_empty() {
            errs.push("at least one cell-type covariate block is required".to_string());
        }
        for (l, x) in self.cell_covariates.iter().enumerate() {
            let name = format!("X{}", l + 1);
            if x.nrows() != n {
                errs.push(format!("{name} has {} rows, expected {n}", x.nrows()));
            }
            check_finite(x, &name, &mut errs);
        }
        let big_l = self.cell_covariates.len();
        if self.proportions.nrows() != n {
            errs.push(format!("proportions has {} rows, expected {n}", self.proportions.nrows()));
        }
        if self.proportions.ncols() != big_l {
            errs.push(format!(
                "proportions has {} columns, expected {big_l} (one per cell type)",
                self.proportions.ncols()
            ));
        }
        for i in 0..self.proportions.nrows() {
            let row = self.proportions.row(i);
            let mut sum = 0.0;
            for (l, &v) in row.iter().enumerate() {
                if !(v > 0.0 && v < 1.0) {
                    errs.push(format!("proportions row {i} column {}: {v} not in (0,1)", l + 1));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                errs.push(format!("proportions row {i}: sums to {sum}, expected 1"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(GptcmError::InvalidData(errs))
        }
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)]);
        Self {
            time: rows.iter().map(|&i| self.time[i]).collect(),
            event: rows.iter().map(|&i| self.event[i]).collect(),
            clinical: pick(&self.clinical),
            cell_covariates: self.cell_covariates.iter().map(pick).collect(),
            proportions: pick(&self.proportions),
        }
    }
}

fn check_finite(m: &DMatrix<f64>, name: &str, errs: &mut Vec<String>) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                errs.push(format!("{name} row {i} column {}: non-finite value", j + 1));
            }
        }
    }
}

/// One point in the full parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterState {
    pub xi0: f64,
    pub xi: Vec<f64>,
    pub v2: f64,
    pub v02: f64,
    pub kappa: f64,
    pub beta0: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<bool>>,
    pub tau2: Vec<f64>,
    pub tau02: f64,
    pub zeta0: Vec<f64>,
    pub zeta: Vec<Vec<f64>>,
    pub eta: Vec<Vec<bool>>,
    pub w2: Vec<f64>,
    pub w02: f64,
    pub pi: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
}

impl ParameterState {
    /// All coefficients zero, indicators active, variances one, κ = 1.
    pub fn zeros(d: usize, p: &[usize]) -> Self {
        let l = p.len();
        let vecs = |v: f64| p.iter().map(|&pl| vec![v; pl]).collect::<Vec<_>>();
        let flags = || p.iter().map(|&pl| vec![true; pl]).collect::<Vec<_>>();
        Self {
            xi0: 0.0,
            xi: vec![0.0; d],
            v2: 1.0,
            v02: 1.0,
            kappa: 1.0,
            beta0: vec![0.0; l],
            beta: vecs(0.0),
            gamma: flags(),
            tau2: vec![1.0; l],
            tau02: 1.0,
            zeta0: vec![0.0; l],
            zeta: vecs(0.0),
            eta: flags(),
            w2: vec![1.0; l],
            w02: 1.0,
            pi: vecs(0.5),
            rho: vecs(0.5),
        }
    }

    pub fn n_types(&self) -> usize {
        self.beta0.len()
    }

    pub fn p_per_type(&self) -> Vec<usize> {
        self.beta.iter().map(Vec::len).collect()
    }

    /// Stacked indicator vector (γ₁₁, γ₂₁, …, γ_pL).
    pub fn gamma_flat(&self) -> Vec<bool> {
        self.gamma.iter().flatten().copied().collect()
    }

    pub fn eta_flat(&self) -> Vec<bool> {
        self.eta.iter().flatten().copied().collect()
    }

    pub fn beta_flat(&self) -> Vec<f64> {
        self.beta.iter().flatten().copied().collect()
    }

    pub fn zeta_flat(&self) -> Vec<f64> {
        self.zeta.iter().flatten().copied().collect()
    }

    /// Checks shapes against the data and the state invariants.
    pub fn validate(&self, data: &SurvivalDataset) -> Result<()> {
        let p = data.p_per_type();
        let l = p.len();
        let mut errs = Vec::new();
        if self.xi.len() != data.d() {
            errs.push(format!("xi has length {}, expected {}", self.xi.len(), data.d()));
        }
        let vec_l = [
            ("beta0", self.beta0.len()),
            ("tau2", self.tau2.len()),
            ("zeta0", self.zeta0.len()),
            ("w2", self.w2.len()),
            ("beta", self.beta.len()),
            ("gamma", self.gamma.len()),
            ("zeta", self.zeta.len()),
            ("eta", self.eta.len()),
            ("pi", self.pi.len()),
            ("rho", self.rho.len()),
        ];
        for (name, len) in vec_l {
            if len != l {
                errs.push(format!("{name} has {len} cell types, expected {l}"));
            }
        }
        if !errs.is_empty() {
            return Err(GptcmError::Dimension(errs.join("; ")));
        }
        for lt in 0..l {
            let blocks = [
                ("beta", self.beta[lt].len()),
                ("gamma", self.gamma[lt].len()),
                ("zeta", self.zeta[lt].len()),
                ("eta", self.eta[lt].len()),
                ("pi", self.pi[lt].len()),
                ("rho", self.rho[lt].len()),
            ];
            for (name, len) in blocks {
                if len != p[lt] {
                    errs.push(format!("{name}[{lt}] has length {len}, expected {}", p[lt]));
                }
            }
        }
        if !errs.is_empty() {
            return Err(GptcmError::Dimension(errs.join("; ")));
        }
        for lt in 0..l {
            for j in 0..p[lt] {
                if !self.gamma[lt][j] && self.beta[lt][j] != 0.0 {
                    errs.push(format!("gamma[{lt}][{j}] = 0 but beta = {}", self.beta[lt][j]));
                }
                if !self.eta[lt][j] && self.zeta[lt][j] != 0.0 {
                    errs.push(format!("eta[{lt}][{j}] = 0 but zeta = {}", self.zeta[lt][j]));
                }
                for (name, v) in [("pi", self.pi[lt][j]), ("rho", self.rho[lt][j])] {
                    if !(v > 0.0 && v < 1.0) {
                        errs.push(format!("{name}[{lt}][{j}] = {v} not in (0,1)"));
                    }
                }
            }
        }
        let mut positives = vec![("v2", self.v2), ("v02", self.v02), ("kappa", self.kappa), ("tau02", self.tau02), ("w02", self.w02)];
        positives.extend(self.tau2.iter().map(|&v| ("tau2", v)));
        positives.extend(self.w2.iter().map(|&v| ("w2", v)));
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} = {v} must be positive"));
            }
        }
        let finite = std::iter::once(self.xi0)
            .chain(self.xi.iter().copied())
            .chain(self.beta0.iter().copied())
            .chain(self.zeta0.iter().copied())
            .chain(self.beta.iter().flatten().copied())
            .chain(self.zeta.iter().flatten().copied());
        if finite.into_iter().any(|v| !v.is_finite()) {
            errs.push("non-finite coefficient".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(GptcmError::Contract(errs.join("; ")))
        }
    }
}

/// Per-subject quantities implied by a parameter state.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedQuantities {
    pub theta: Vec<f64>,
    /// n × L matrices.
    pub mu: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    pub props: DMatrix<f64>,
    pub surv: DMatrix<f64>,
    /// Number of linear predictors clamped before exponentiation.
    pub clamp_events: usize,
}
