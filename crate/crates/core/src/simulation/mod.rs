//! Synthetic multiscale survival data: the GPTCM generator with correlated
//! cell-type covariates and Dirichlet proportions, and a Cox-Weibull
//! generator for misspecification studies.

mod covariance;
mod times;

pub use covariance::{build_covariance, build_mrf_graph_from_precision, same_variable_graph, PRECISION_THRESHOLD};
pub use times::{noncured_quantile, noncured_survival, sample_noncured_time, sample_noncured_time_mh, MAX_TIME};

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{GptcmError, Result};
use crate::model::density::log_sum_exp;
use crate::model::likelihood::linear_predictors;
use crate::model::types::{MrfGraph, ParameterState, SurvivalDataset, Variant};
use crate::samplers::{stream_rng, Block};

/// Which generator a [`SimConfig`] drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Gptcm,
    CoxMisspec,
}

/// Which proportions weight the cell-type survival functions when event
/// times are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureWeights {
    /// The Dirichlet means `α / Σα`.
    #[default]
    Mean,
    /// The sampled compositions themselves.
    Observed,
}

/// Censoring time `min(Uniform(lower, upper), Exponential(rate))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoringDesign {
    pub uniform_lower: f64,
    pub uniform_upper: f64,
    pub exp_rate: f64,
}

impl Default for CensoringDesign {
    fn default() -> Self {
        Self {
            uniform_lower: 1.0,
            uniform_upper: 4.0,
            exp_rate: -(0.8f64.ln()) / 5.0,
        }
    }
}

impl CensoringDesign {
    pub fn validate(&self) -> Result<()> {
        if !(self.uniform_lower >= 0.0 && self.uniform_upper > self.uniform_lower && self.uniform_upper.is_finite()) {
            return Err(GptcmError::Config(format!(
                "censoring window [{}, {}] is invalid",
                self.uniform_lower, self.uniform_upper
            )));
        }
        if !(self.exp_rate > 0.0 && self.exp_rate.is_finite()) {
            return Err(GptcmError::Config(format!("censoring rate {} must be positive", self.exp_rate)));
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = Uniform::new(self.uniform_lower, self.uniform_upper)
            .expect("validated window")
            .sample(rng);
        let e: f64 = Exp::new(self.exp_rate).expect("validated rate").sample(rng);
        u.min(e)
    }
}

/// Settings of the Cox-Weibull generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxDesign {
    pub effects: Vec<f64>,
    /// Baseline hazard scale h₀ in `h(t) = h₀ κ t^{κ-1} exp(xᵀb)`.
    pub h0: f64,
    /// Target censoring fraction for the calibrated exponential censoring.
    pub censoring: f64,
    /// Number of pseudo cell types.
    pub pseudo_types: usize,
}

impl Default for CoxDesign {
    fn default() -> Self {
        Self {
            effects: vec![-0.8, -2.0, -2.0, 1.0, 1.0],
            h0: 0.5,
            censoring: 0.2,
            pseudo_types: 3,
        }
    }
}

/// Full description of a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub mode: SimMode,
    pub n: usize,
    pub p: usize,
    pub n_types: usize,
    pub kappa: f64,
    /// Correlation between copies of the same covariate in different types.
    pub rho: f64,
    /// AR correlation inside each type's leading band.
    pub rho_within: Vec<f64>,
    /// Number of leading covariates per type that are correlated.
    pub band: usize,
    pub xi0: f64,
    /// Effects of the clinical covariates (one Bernoulli, one normal).
    pub xi: Vec<f64>,
    pub beta0: Vec<f64>,
    /// `beta[l][j]`.
    pub beta: Vec<Vec<f64>>,
    pub zeta0: Vec<f64>,
    pub zeta: Vec<Vec<f64>>,
    pub censoring: CensoringDesign,
    pub weights: MixtureWeights,
    pub cox: CoxDesign,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::low_dim()
    }
}

fn padded(lead: &[f64], p: usize) -> Vec<f64> {
    (0..p).map(|j| lead.get(j).copied().unwrap_or(0.0)).collect()
}

const BETA_LEAD: [[f64; 7]; 3] = [
    [-1.0, -0.5, 0.8, 0.8, -1.0, 0.0, 0.0],
    [0.0, -0.9, -0.8, 0.0, 1.5, 1.0, 0.0],
    [1.0, 0.0, -0.4, -1.5, 0.0, 0.0, 0.8],
];
const ZETA_LEAD: [[f64; 7]; 3] = [
    [0.7, -0.7, 0.5, -0.5, 1.0, 0.0, 0.0],
    [-0.5, 0.5, 0.0, 1.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0, -0.5, -0.7, 0.0, 0.0],
];

impl SimConfig {
    /// The low-dimensional study: n = 200, p = 10, L = 3.
    pub fn low_dim() -> Self {
        Self::with_p(10)
    }

    /// The high-dimensional study: n = 200, p = 200, L = 3.
    pub fn high_dim() -> Self {
        Self::with_p(200)
    }

    /// GPTCM design with `p` covariates per cell type; the nonzero effects
    /// sit on the first seven covariates.
    pub fn with_p(p: usize) -> Self {
        Self {
            mode: SimMode::Gptcm,
            n: 200,
            p,
            n_types: 3,
            kappa: 2.0,
            rho: 0.1,
            rho_within: vec![0.13, 0.14, 0.15],
            band: 6,
            xi0: 1.0,
            xi: vec![0.6, -1.0],
            beta0: vec![0.0; 3],
            beta: BETA_LEAD.iter().map(|b| padded(b, p)).collect(),
            zeta0: vec![-0.5, 1.0, 1.2],
            zeta: ZETA_LEAD.iter().map(|z| padded(z, p)).collect(),
            censoring: CensoringDesign::default(),
            weights: MixtureWeights::default(),
            cox: CoxDesign::default(),
            seed: 1,
        }
    }

    /// Cox-Weibull misspecification design with five normal covariates.
    pub fn cox_misspec() -> Self {
        let cox = CoxDesign::default();
        let p = cox.effects.len();
        let l = cox.pseudo_types;
        Self {
            mode: SimMode::CoxMisspec,
            n: 200,
            p,
            n_types: l,
            kappa: 2.0,
            rho: 0.0,
            rho_within: vec![0.0; l],
            band: 0,
            xi0: cox.h0.ln(),
            xi: cox.effects.clone(),
            beta0: vec![0.0; l],
            beta: vec![vec![0.0; p]; l],
            zeta0: vec![0.0; l],
            zeta: vec![vec![0.0; p]; l],
            censoring: CensoringDesign::default(),
            weights: MixtureWeights::default(),
            cox,
            seed: 1,
        }
    }

    /// Preset by name: `low-dim`, `high-dim` or `cox-misspec`.
    pub fn preset(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "low-dim" | "low" => Ok(Self::low_dim()),
            "high-dim" | "high" => Ok(Self::high_dim()),
            "cox-misspec" | "cox" => Ok(Self::cox_misspec()),
            other => Err(GptcmError::Config(format!(
                "unknown preset '{other}' (expected low-dim, high-dim or cox-misspec)"
            ))),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.n_types == 0 {
            return Err(GptcmError::Config("n, p and L must be positive".into()));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(GptcmError::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        match self.mode {
            SimMode::Gptcm => {
                if self.n_types < 2 {
                    return Err(GptcmError::Config("the GPTCM generator needs at least two cell types".into()));
                }
                if self.xi.len() != 2 {
                    return Err(GptcmError::Config(format!(
                        "expected 2 clinical effects, got {}",
                        self.xi.len()
                    )));
                }
                for (name, v) in [("beta0", &self.beta0), ("zeta0", &self.zeta0)] {
                    if v.len() != self.n_types {
                        return Err(GptcmError::Config(format!(
                            "{name} has {} entries, expected {}",
                            v.len(),
                            self.n_types
                        )));
                    }
                }
                for (name, m) in [("beta", &self.beta), ("zeta", &self.zeta)] {
                    if m.len() != self.n_types || m.iter().any(|r| r.len() != self.p) {
                        return Err(GptcmError::Config(format!(
                            "{name} must be {} rows of {} effects",
                            self.n_types, self.p
                        )));
                    }
                }
                let all = self.xi.iter().chain(&self.beta0).chain(&self.zeta0).chain(self.beta.iter().flatten());
                if all.chain(self.zeta.iter().flatten()).any(|v| !v.is_finite()) {
                    return Err(GptcmError::Config("coefficients must be finite".into()));
                }
                self.censoring.validate()?;
                build_covariance(self.p, self.n_types, self.rho, &self.rho_within, self.band)?;
            }
            SimMode::CoxMisspec => {
                let c = &self.cox;
                if c.effects.is_empty() || c.effects.iter().any(|v| !v.is_finite()) {
                    return Err(GptcmError::Config("Cox effects must be finite and nonempty".into()));
                }
                if self.p != c.effects.len() || self.n_types != c.pseudo_types {
                    return Err(GptcmError::Config(format!(
                        "Cox design has {} covariates and {} pseudo types but p = {}, L = {}",
                        c.effects.len(),
                        c.pseudo_types,
                        self.p,
                        self.n_types
                    )));
                }
                if c.pseudo_types < 2 {
                    return Err(GptcmError::Config("need at least two pseudo cell types".into()));
                }
                if !(c.h0 > 0.0 && c.h0.is_finite()) {
                    return Err(GptcmError::Config(format!("h0 must be positive, got {}", c.h0)));
                }
                if !(c.censoring > 0.0 && c.censoring < 1.0) {
                    return Err(GptcmError::Config(format!(
                        "censoring target must lie in (0,1), got {}",
                        c.censoring
                    )));
                }
            }
        }
        Ok(())
    }

    /// Covariance of the stacked cell-type covariates.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        build_covariance(self.p, self.n_types, self.rho, &self.rho_within, self.band)
    }

    /// Prior graph matching the design: from the precision matrix for the
    /// GPTCM generator, same-variable links for the Cox design.
    pub fn graph(&self, a: f64, b: f64) -> Result<MrfGraph> {
        match self.mode {
            SimMode::Gptcm => build_mrf_graph_from_precision(&self.covariance()?, self.p, self.n_types, a, b),
            SimMode::CoxMisspec => same_variable_graph(self.p, self.n_types, a, b),
        }
    }

    /// The generating coefficients as a parameter state. Indicators mark
    /// the nonzero effects; variances are left at 1.
    pub fn true_state(&self) -> ParameterState {
        let d = self.xi.len();
        let p = vec![self.p; self.n_types];
        let mut s = ParameterState::zeros(d, &p);
        s.xi0 = self.xi0;
        s.xi = self.xi.clone();
        s.kappa = self.kappa;
        s.beta0 = self.beta0.clone();
        s.beta = self.beta.clone();
        s.zeta0 = self.zeta0.clone();
        s.zeta = self.zeta.clone();
        s.gamma = self.beta.iter().map(|r| r.iter().map(|&b| b != 0.0).collect()).collect();
        s.eta = self.zeta.iter().map(|r| r.iter().map(|&z| z != 0.0).collect()).collect();
        s
    }
}

/// Ground truth behind a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub config: SimConfig,
    pub replicate: u64,
    /// Generating parameters; for the Cox design ξ₀ = ln h₀, ξ = b and all
    /// cell-type effects are zero.
    pub state: ParameterState,
    pub theta: Vec<f64>,
    pub cured: Vec<bool>,
    /// Uncensored event time, `None` for cured subjects.
    pub latent_time: Vec<Option<f64>>,
    pub censoring_time: Vec<f64>,
    /// Proportions that weighted the survival mixture (n rows of L).
    pub props: Vec<Vec<f64>>,
    /// Exponential censoring rate actually used.
    pub censoring_rate: f64,
}

impl SimulationTruth {
    pub fn censoring_fraction(&self) -> f64 {
        let n = self.cured.len() as f64;
        let censored = self
            .latent_time
            .iter()
            .zip(&self.censoring_time)
            .filter(|(t, c)| t.is_none_or(|t| t > **c))
            .count();
        censored as f64 / n
    }

    pub fn cured_fraction(&self) -> f64 {
        self.cured.iter().filter(|&&c| c).count() as f64 / self.cured.len() as f64
    }
}

fn log_gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    // For small shapes Gamma(a) = Gamma(a + 1) · U^{1/a}; taking logs keeps
    // draws that would underflow.
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        g.ln()
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        g.ln() + u.ln() / shape
    }
}

/// A Dirichlet(α) draw with every entry strictly inside (0, 1).
pub fn draw_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if alpha.len() < 2 || alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(GptcmError::Domain(format!("invalid Dirichlet parameters {alpha:?}")));
    }
    let logs: Vec<f64> = alpha.iter().map(|&a| log_gamma_draw(a, rng)).collect();
    let norm = log_sum_exp(&logs);
    let mut p: Vec<f64> = logs.iter().map(|&g| (g - norm).exp().max(f64::MIN_POSITIVE)).collect();
    for x in &mut p {
        if *x >= 1.0 {
            *x = 1.0 - f64::EPSILON;
        }
    }
    Ok(p)
}

fn standard_normal_matrix<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            m[(i, j)] = StandardNormal.sample(rng);
        }
    }
    m
}

/// Draws the GPTCM dataset of replicate 0.
pub fn simulate_gptcm(cfg: &SimConfig) -> Result<(SurvivalDataset, SimulationTruth)> {
    simulate_gptcm_replicate(cfg, 0)
}

/// Independent dataset `replicate` from the same truth. Replicate 0 is the
/// training set, 1 the validation set.
pub fn simulate_gptcm_replicate(cfg: &SimConfig, replicate: u64) -> Result<(SurvivalDataset, SimulationTruth)> {
    if cfg.mode != SimMode::Gptcm {
        return Err(GptcmError::Config("configuration is not in gptcm mode".into()));
    }
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, replicate, Block::Simulation);
    let (n, p, big_l) = (cfg.n, cfg.p, cfg.n_types);

    let mut clinical = DMatrix::zeros(n, 2);
    for i in 0..n {
        clinical[(i, 0)] = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        clinical[(i, 1)] = StandardNormal.sample(&mut rng);
    }
    let sigma = cfg.covariance()?;
    let chol = Cholesky::new(sigma).ok_or_else(|| GptcmError::Config("covariance is not PD".into()))?;
    let z = standard_normal_matrix(n, p * big_l, &mut rng);
    let stacked = z * chol.l().transpose();
    let cells: Vec<DMatrix<f64>> = (0..big_l).map(|l| stacked.columns(l * p, p).into_owned()).collect();

    let state = cfg.true_state();
    // placeholder proportions; replaced by the Dirichlet draws below
    let uniform = DMatrix::from_element(n, big_l, 1.0 / big_l as f64);
    let design = SurvivalDataset {
        time: vec![1.0; n],
        event: vec![false; n],
        clinical,
        cell_covariates: cells,
        proportions: uniform,
    };
    let derived = linear_predictors(&state, &design, true)?;
    let mut observed = DMatrix::zeros(n, big_l);
    for i in 0..n {
        let alpha: Vec<f64> = derived.alpha.row(i).iter().copied().collect();
        let draw = draw_dirichlet(&alpha, &mut rng)?;
        for l in 0..big_l {
            observed[(i, l)] = draw[l];
        }
    }
    let weights = match cfg.weights {
        MixtureWeights::Mean => derived.props,
        MixtureWeights::Observed => observed.clone(),
    };
    let outcome = draw_outcomes(&derived.theta, &weights, &derived.lambda, cfg.kappa, &cfg.censoring, &mut rng)?;
    let data = SurvivalDataset::new(
        outcome.time,
        outcome.event,
        design.clinical,
        design.cell_covariates,
        observed,
    )?;
    let truth = SimulationTruth {
        config: cfg.clone(),
        replicate,
        state,
        theta: derived.theta,
        cured: outcome.cured,
        latent_time: outcome.latent,
        censoring_time: outcome.censor,
        props: (0..n).map(|i| weights.row(i).iter().copied().collect()).collect(),
        censoring_rate: cfg.censoring.exp_rate,
    };
    Ok((data, truth))
}

struct Outcomes {
    time: Vec<f64>,
    event: Vec<bool>,
    cured: Vec<bool>,
    latent: Vec<Option<f64>>,
    censor: Vec<f64>,
}

fn draw_outcomes<R: Rng + ?Sized>(
    theta: &[f64],
    props: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    kappa: f64,
    censoring: &CensoringDesign,
    rng: &mut R,
) -> Result<Outcomes> {
    let n = theta.len();
    let mut out = Outcomes {
        time: Vec::with_capacity(n),
        event: Vec::with_capacity(n),
        cured: Vec::with_capacity(n),
        latent: Vec::with_capacity(n),
        censor: Vec::with_capacity(n),
    };
    for i in 0..n {
        let c = censoring.draw(rng);
        let u: f64 = rng.random();
        let cured = u <= (-theta[i]).exp();
        let latent = if cured {
            None
        } else {
            let pr: Vec<f64> = props.row(i).iter().copied().collect();
            let lam: Vec<f64> = lambda.row(i).iter().copied().collect();
            Some(sample_noncured_time(theta[i], &pr, &lam, kappa, rng)?)
        };
        let (t, d) = match latent {
            Some(t) if t <= c => (t, true),
            _ => (c, false),
        };
        out.time.push(t);
        out.event.push(d);
        out.cured.push(cured);
        out.latent.push(latent);
        out.censor.push(c);
    }
    Ok(out)
}

/// Replaces the outcomes of `data` by a fresh draw from the model at
/// `state`, keeping the covariates. Variants with measurement error also
/// redraw the observed proportions from Dirichlet(α).
pub fn resimulate_outcomes<R: Rng + ?Sized>(
    state: &ParameterState,
    data: &SurvivalDataset,
    variant: Variant,
    censoring: &CensoringDesign,
    rng: &mut R,
) -> Result<SurvivalDataset> {
    let me = variant.has_measurement_error();
    let derived = linear_predictors(state, data, me)?;
    let mut out = data.clone();
    if me {
        for i in 0..data.n() {
            let alpha: Vec<f64> = derived.alpha.row(i).iter().copied().collect();
            let draw = draw_dirichlet(&alpha, rng)?;
            for (l, v) in draw.into_iter().enumerate() {
                out.proportions[(i, l)] = v;
            }
        }
    }
    let o = draw_outcomes(&derived.theta, &derived.props, &derived.lambda, state.kappa, censoring, rng)?;
    out.time = o.time;
    out.event = o.event;
    out.validate()?;
    Ok(out)
}

/// Draws the Cox-Weibull dataset of replicate 0.
pub fn simulate_cox_misspec(cfg: &SimConfig) -> Result<(SurvivalDataset, SimulationTruth)> {
    simulate_cox_replicate(cfg, 0)
}

fn cox_time(x: &[f64], cox: &CoxDesign, kappa: f64, u: f64) -> f64 {
    let lin: f64 = x.iter().zip(&cox.effects).map(|(a, b)| a * b).sum();
    (-u.ln() / (cox.h0 * lin.exp())).powf(1.0 / kappa)
}

/// Exponential censoring rate giving the target censoring fraction on
/// average, calibrated on a large pilot sample of event times.
fn calibrate_censoring_rate(cfg: &SimConfig) -> f64 {
    let mut rng = stream_rng(cfg.seed, 1 << 40, Block::Simulation);
    let k = cfg.cox.effects.len();
    let pilot: Vec<f64> = (0..20_000)
        .map(|_| {
            let x: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            cox_time(&x, &cfg.cox, cfg.kappa, u)
        })
        .collect();
    // P(C < T) = E[1 - exp(-r T)], increasing in r
    let frac = |r: f64| pilot.iter().map(|&t| -(-r * t).exp_m1()).sum::<f64>() / pilot.len() as f64;
    let (mut lo, mut hi) = (-30.0f64, 30.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if frac(mid.exp()) < cfg.cox.censoring {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Independent Cox-Weibull dataset `replicate` from the same design.
pub fn simulate_cox_replicate(cfg: &SimConfig, replicate: u64) -> Result<(SurvivalDataset, SimulationTruth)> {
    if cfg.mode != SimMode::CoxMisspec {
        return Err(GptcmError::Config("configuration is not in cox_misspec mode".into()));
    }
    cfg.validate()?;
    let rate = calibrate_censoring_rate(cfg);
    let mut rng = stream_rng(cfg.seed, replicate, Block::Simulation);
    let (n, k, big_l) = (cfg.n, cfg.p, cfg.n_types);
    let x = standard_normal_matrix(n, k, &mut rng);
    let cens = Exp::new(rate).map_err(|e| GptcmError::Config(e.to_string()))?;
    let mut time = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);
    let mut censor = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let t = cox_time(&row, &cfg.cox, cfg.kappa, u);
        let c: f64 = cens.sample(&mut rng);
        let lin: f64 = row.iter().zip(&cfg.cox.effects).map(|(a, b)| a * b).sum();
        theta.push(cfg.cox.h0 * lin.exp());
        time.push(t.min(c));
        event.push(t <= c);
        latent.push(Some(t));
        censor.push(c);
    }
    let share = 1.0 / big_l as f64;
    let data = SurvivalDataset::new(
        time,
        event,
        x.clone(),
        vec![x; big_l],
        DMatrix::from_element(n, big_l, share),
    )?;
    let truth = SimulationTruth {
        config: cfg.clone(),
        replicate,
        state: cfg.true_state(),
        theta,
        cured: vec![false; n],
        latent_time: latent,
        censoring_time: censor,
        props: vec![vec![share; big_l]; n],
        censoring_rate: rate,
    };
    Ok((data, truth))
}

/// Dispatches on the configuration's mode.
pub fn simulate(cfg: &SimConfig, replicate: u64) -> Result<(SurvivalDataset, SimulationTruth)> {
    match cfg.mode {
        SimMode::Gptcm => simulate_gptcm_replicate(cfg, replicate),
        SimMode::CoxMisspec => simulate_cox_replicate(cfg, replicate),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_padded() {
        let c = SimConfig::low_dim();
        assert_eq!(c.beta[0], vec![-1.0, -0.5, 0.8, 0.8, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(c.zeta0, vec![-0.5, 1.0, 1.2]);
        assert_eq!(SimConfig::high_dim().beta[2].len(), 200);
        c.validate().unwrap();
        SimConfig::cox_misspec().validate().unwrap();
    }

    #[test]
    fn dirichlet_handles_tiny_shapes() {
        let mut rng = stream_rng(3, 0, Block::Other);
        for _ in 0..1000 {
            let d = draw_dirichlet(&[1e-3, 5.0, 5.0], &mut rng).unwrap();
            assert!(d.iter().all(|&x| x > 0.0 && x < 1.0));
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }
}
