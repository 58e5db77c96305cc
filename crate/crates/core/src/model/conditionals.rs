//! Full conditional log densities (up to additive constants) and the
//! conjugate posterior parameters of the variance and probability blocks.

use serde::{Deserialize, Serialize};

use crate::error::{GptcmError, Result};
use crate::model::cache::ModelCache;
use crate::model::prior::ln_gamma_density;
use crate::model::types::{HyperParams, ModelSpec, ParameterState, Selection, SurvivalDataset};

/// A single scalar coordinate of the parameter state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    Xi0,
    Xi(usize),
    Kappa,
    Beta0(usize),
    /// (cell type l, covariate j)
    Beta(usize, usize),
    Zeta0(usize),
    Zeta(usize, usize),
}

impl Coord {
    pub fn get(self, s: &ParameterState) -> f64 {
        match self {
            Coord::Xi0 => s.xi0,
            Coord::Xi(k) => s.xi[k],
            Coord::Kappa => s.kappa,
            Coord::Beta0(l) => s.beta0[l],
            Coord::Beta(l, j) => s.beta[l][j],
            Coord::Zeta0(l) => s.zeta0[l],
            Coord::Zeta(l, j) => s.zeta[l][j],
        }
    }

    pub fn set(self, s: &mut ParameterState, v: f64) {
        match self {
            Coord::Xi0 => s.xi0 = v,
            Coord::Xi(k) => s.xi[k] = v,
            Coord::Kappa => s.kappa = v,
            Coord::Beta0(l) => s.beta0[l] = v,
            Coord::Beta(l, j) => s.beta[l][j] = v,
            Coord::Zeta0(l) => s.zeta0[l] = v,
            Coord::Zeta(l, j) => s.zeta[l][j] = v,
        }
    }

    /// Prior variance of a Gaussian coordinate; `None` for κ.
    pub fn prior_variance(self, s: &ParameterState) -> Option<f64> {
        match self {
            Coord::Xi0 => Some(s.v02),
            Coord::Xi(_) => Some(s.v2),
            Coord::Kappa => None,
            Coord::Beta0(_) => Some(s.tau02),
            Coord::Beta(l, _) => Some(s.tau2[l]),
            Coord::Zeta0(_) => Some(s.w02),
            Coord::Zeta(l, _) => Some(s.w2[l]),
        }
    }
}

fn check_coord(coord: Coord, state: &ParameterState, spec: &ModelSpec) -> Result<()> {
    let none = spec.variant.selection() == Selection::None;
    match coord {
        Coord::Beta(l, j) if !none && !state.gamma[l][j] => Err(GptcmError::Contract(format!(
            "beta[{l}][{j}] has no conditional while gamma = 0"
        ))),
        Coord::Zeta(..) | Coord::Zeta0(_) if !spec.variant.has_measurement_error() => Err(GptcmError::Contract(
            format!("{} has no proportion regression coefficients", spec.variant),
        )),
        Coord::Zeta(l, j) if !none && !state.eta[l][j] => Err(GptcmError::Contract(format!(
            "zeta[{l}][{j}] has no conditional while eta = 0"
        ))),
        _ => Ok(()),
    }
}

/// Conditional log density at `value` using an existing cache built for `state`.
///
/// Only likelihood terms that depend on the coordinate are included.
pub fn conditional_at(
    cache: &ModelCache,
    data: &SurvivalDataset,
    state: &ParameterState,
    hyper: &HyperParams,
    coord: Coord,
    value: f64,
) -> f64 {
    let delta = value - coord.get(state);
    let ll = match coord {
        Coord::Xi0 => cache.loglik_theta_shift(None, delta),
        Coord::Xi(k) => cache.loglik_theta_shift(Some(data.clinical.column(k).as_slice()), delta),
        Coord::Kappa => {
            if value <= 0.0 {
                return f64::NEG_INFINITY;
            }
            return cache.loglik_kappa(value) + ln_gamma_density(value, hyper.a_kappa, hyper.b_kappa);
        }
        Coord::Beta0(l) => cache.loglik_mu_shift(l, None, delta),
        Coord::Beta(l, j) => cache.loglik_mu_shift(l, Some(data.cell_covariates[l].column(j).as_slice()), delta),
        Coord::Zeta0(l) => cache.loglik_alpha_shift(l, None, delta),
        Coord::Zeta(l, j) => cache.loglik_alpha_shift(l, Some(data.cell_covariates[l].column(j).as_slice()), delta),
    };
    let var = coord.prior_variance(state).expect("gaussian coordinate");
    ll - value * value / (2.0 * var)
}

/// Commits a new coordinate value to both the state and the cache.
pub fn commit(cache: &mut ModelCache, data: &SurvivalDataset, state: &mut ParameterState, coord: Coord, value: f64) {
    let delta = value - coord.get(state);
    coord.set(state, value);
    if delta == 0.0 && coord != Coord::Kappa {
        return;
    }
    match coord {
        Coord::Xi0 => cache.apply_theta_shift(None, delta),
        Coord::Xi(k) => cache.apply_theta_shift(Some(data.clinical.column(k).as_slice()), delta),
        Coord::Kappa => cache.set_kappa(value),
        Coord::Beta0(l) => cache.apply_mu_shift(l, None, delta),
        Coord::Beta(l, j) => cache.apply_mu_shift(l, Some(data.cell_covariates[l].column(j).as_slice()), delta),
        Coord::Zeta0(l) => cache.apply_alpha_shift(l, None, delta),
        Coord::Zeta(l, j) => cache.apply_alpha_shift(l, Some(data.cell_covariates[l].column(j).as_slice()), delta),
    }
}

/// Conditional log density of any coordinate at `value`.
pub fn logcond(
    coord: Coord,
    value: f64,
    state: &ParameterState,
    data: &SurvivalDataset,
    spec: &ModelSpec,
) -> Result<f64> {
    state.validate(data)?;
    check_coord(coord, state, spec)?;
    let cache = ModelCache::new(state, data, spec, true);
    Ok(conditional_at(&cache, data, state, &spec.hyper, coord, value))
}

pub fn logcond_beta(j: usize, l: usize, value: f64, state: &ParameterState, data: &SurvivalDataset, spec: &ModelSpec) -> Result<f64> {
    logcond(Coord::Beta(l, j), value, state, data, spec)
}

pub fn logcond_beta0(l: usize, value: f64, state: &ParameterState, data: &SurvivalDataset, spec: &ModelSpec) -> Result<f64> {
    logcond(Coord::Beta0(l), value, state, data, spec)
}

pub fn logcond_xi(k: usize, value: f64, state: &ParameterState, data: &SurvivalDataset, spec: &ModelSpec) -> Result<f64> {
    logcond(Coord::Xi(k), value, state, data, spec)
}

pub fn logcond_xi0(value: f64, state: &ParameterState, data: &SurvivalDataset, spec: &ModelSpec) -> Result<f64> {
    logcond(Coord::Xi0, value, state, data, spec)
}

pub fn logcond_zeta(j: usize, l: usize, value: f64, state: &ParameterState, data: &SurvivalDataset, spec: &ModelSpec) -> Result<f64> {
    logcond(Coord::Zeta(l, j), value, state, data, spec)
}

pub fn logcond_zeta0(l: usize, value: f64, state: &ParameterState, data: &SurvivalDataset, spec: &ModelSpec) -> Result<f64> {
    logcond(Coord::Zeta0(l), value, state, data, spec)
}

pub fn logcond_kappa(value: f64, state: &ParameterState, data: &SurvivalDataset, spec: &ModelSpec) -> Result<f64> {
    logcond(Coord::Kappa, value, state, data, spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGammaParams {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

/// Parameters of every conjugate full conditional.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatePosteriors {
    pub v2: InvGammaParams,
    pub v02: InvGammaParams,
    pub tau2: Vec<InvGammaParams>,
    pub tau02: InvGammaParams,
    pub w2: Vec<InvGammaParams>,
    pub w02: InvGammaParams,
    pub pi: Vec<Vec<BetaParams>>,
    pub rho: Vec<Vec<BetaParams>>,
}

fn active_sums(coefs: &[f64], flags: &[bool], all_active: bool) -> (f64, f64) {
    coefs.iter().zip(flags).fold((0.0, 0.0), |(k, ss), (&c, &g)| {
        if g || all_active {
            (k + 1.0, ss + c * c)
        } else {
            (k, ss)
        }
    })
}

/// Conjugate posterior parameters given the current state.
///
/// The π/ρ updates use `Beta(a + γ_jl, b + p − γ_jl)` per coefficient.
pub fn conjugate_posteriors(state: &ParameterState, hyper: &HyperParams, selection: Selection) -> ConjugatePosteriors {
    let all = selection == Selection::None;
    let d = state.xi.len() as f64;
    let l_count = state.n_types() as f64;
    let ig = |shape, rate| InvGammaParams { shape, rate };
    let tau2 = (0..state.n_types())
        .map(|l| {
            let (k, ss) = active_sums(&state.beta[l], &state.gamma[l], all);
            ig(hyper.a_tau + 0.5 * k, hyper.b_tau + 0.5 * ss)
        })
        .collect();
    let w2 = (0..state.n_types())
        .map(|l| {
            let (k, ss) = active_sums(&state.zeta[l], &state.eta[l], all);
            ig(hyper.a_w + 0.5 * k, hyper.b_w + 0.5 * ss)
        })
        .collect();
    let probs = |flags: &[Vec<bool>], a: f64, b_for: &dyn Fn(usize) -> f64| {
        flags
            .iter()
            .map(|f| {
                let p = f.len();
                let b = b_for(p);
                f.iter()
                    .map(|&g| {
                        let g = if g { 1.0 } else { 0.0 };
                        BetaParams {
                            a: a + g,
                            b: b + p as f64 - g,
                        }
                    })
                    .collect()
            })
            .collect()
    };
    ConjugatePosteriors {
        v2: ig(hyper.a_v + 0.5 * d, hyper.b_v + 0.5 * state.xi.iter().map(|x| x * x).sum::<f64>()),
        v02: ig(hyper.a_v0 + 0.5, hyper.b_v0 + 0.5 * state.xi0 * state.xi0),
        tau2,
        tau02: ig(
            hyper.a_tau0 + 0.5 * l_count,
            hyper.b_tau0 + 0.5 * state.beta0.iter().map(|x| x * x).sum::<f64>(),
        ),
        w2,
        w02: ig(
            hyper.a_w0 + 0.5 * l_count,
            hyper.b_w0 + 0.5 * state.zeta0.iter().map(|x| x * x).sum::<f64>(),
        ),
        pi: probs(&state.gamma, hyper.a_pi, &|p| hyper.b_pi_for(p)),
        rho: probs(&state.eta, hyper.a_rho, &|p| hyper.b_rho_for(p)),
    }
}
