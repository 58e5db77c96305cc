//! Linear predictors and the full-data likelihood, evaluated directly from
//! the scalar densities. This is the reference path; the sampler uses the
//! incremental [`ModelCache`](crate::model::cache::ModelCache).

use nalgebra::DMatrix;

use crate::error::{GptcmError, Result};
use crate::model::density::{dirichlet_log_density, population_log_density, population_log_survival};
use crate::model::types::{DerivedQuantities, ModelSpec, ParameterState, SurvivalDataset};

/// Linear predictors are clamped to `±EXP_CLAMP` before exponentiation.
pub const EXP_CLAMP: f64 = 500.0;

/// Clamps a linear predictor, counting the event.
#[inline]
pub fn clamp_linear(x: f64, clamps: &mut usize) -> f64 {
    if x > EXP_CLAMP {
        *clamps += 1;
        EXP_CLAMP
    } else if x < -EXP_CLAMP {
        *clamps += 1;
        -EXP_CLAMP
    } else {
        x
    }
}

fn check_dims(state: &ParameterState, data: &SurvivalDataset) -> Result<()> {
    if state.xi.len() != data.d() || state.beta.len() != data.n_types() {
        return Err(GptcmError::Dimension(format!(
            "state has d={}, L={} but data have d={}, L={}",
            state.xi.len(),
            state.beta.len(),
            data.d(),
            data.n_types()
        )));
    }
    for (l, x) in data.cell_covariates.iter().enumerate() {
        if state.beta[l].len() != x.ncols() || state.zeta[l].len() != x.ncols() {
            return Err(GptcmError::Dimension(format!(
                "cell type {}: state has {} coefficients, data have {} columns",
                l + 1,
                state.beta[l].len(),
                x.ncols()
            )));
        }
    }
    Ok(())
}

/// θ, μ, λ, α, p and S_l(t_i) for every subject.
///
/// When `measurement_error` is false the observed proportions are used as p
/// verbatim and α is reported as all ones.
pub fn linear_predictors(
    state: &ParameterState,
    data: &SurvivalDataset,
    measurement_error: bool,
) -> Result<DerivedQuantities> {
    check_dims(state, data)?;
    let n = data.n();
    let big_l = data.n_types();
    let mut clamps = 0usize;
    let mut theta = vec![0.0; n];
    let lin0 = &data.clinical * nalgebra::DVector::from_column_slice(&state.xi);
    for i in 0..n {
        theta[i] = clamp_linear(state.xi0 + lin0[i], &mut clamps).exp();
    }
    let lg = crate::model::density::ln_mean_to_scale(state.kappa);
    let mut mu = DMatrix::zeros(n, big_l);
    let mut lambda = DMatrix::zeros(n, big_l);
    let mut alpha = DMatrix::from_element(n, big_l, 1.0);
    let mut surv = DMatrix::zeros(n, big_l);
    for (l, x) in data.cell_covariates.iter().enumerate() {
        let lin = x * nalgebra::DVector::from_column_slice(&state.beta[l]);
        let lin_a = x * nalgebra::DVector::from_column_slice(&state.zeta[l]);
        for i in 0..n {
            let lm = clamp_linear(state.beta0[l] + lin[i], &mut clamps);
            mu[(i, l)] = lm.exp();
            lambda[(i, l)] = (lm - lg).exp();
            surv[(i, l)] = (-(data.time[i] / lambda[(i, l)]).powf(state.kappa)).exp();
            if measurement_error {
                alpha[(i, l)] = clamp_linear(state.zeta0[l] + lin_a[i], &mut clamps).exp();
            }
        }
    }
    let props = if measurement_error {
        let mut p = alpha.clone();
        for i in 0..n {
            let s: f64 = alpha.row(i).sum();
            for l in 0..big_l {
                p[(i, l)] = alpha[(i, l)] / s;
            }
        }
        p
    } else {
        data.proportions.clone()
    };
    Ok(DerivedQuantities {
        theta,
        mu,
        lambda,
        alpha,
        props,
        surv,
        clamp_events: clamps,
    })
}

/// Per-subject log-likelihood contributions (survival part plus, for the
/// measurement-error variants, the Dirichlet density of the observed
/// composition).
pub fn pointwise_log_likelihood(
    state: &ParameterState,
    data: &SurvivalDataset,
    spec: &ModelSpec,
) -> Result<Vec<f64>> {
    let me = spec.variant.has_measurement_error();
    let dq = linear_predictors(state, data, me)?;
    let big_l = data.n_types();
    let mut out = Vec::with_capacity(data.n());
    let mut props = vec![0.0; big_l];
    let mut lams = vec![0.0; big_l];
    let mut ptilde = vec![0.0; big_l];
    let mut alpha = vec![0.0; big_l];
    for i in 0..data.n() {
        for l in 0..big_l {
            props[l] = dq.props[(i, l)];
            lams[l] = dq.lambda[(i, l)];
            ptilde[l] = data.proportions[(i, l)];
            alpha[l] = dq.alpha[(i, l)];
        }
        let t = data.time[i];
        let mut ll = if data.event[i] {
            population_log_density(t, dq.theta[i], &props, &lams, state.kappa)?
        } else {
            population_log_survival(t, dq.theta[i], &props, &lams, state.kappa)?
        };
        if me {
            ll += dirichlet_log_density(&ptilde, &alpha)?;
        }
        if ll.is_nan() {
            return Err(GptcmError::Domain(format!("log-likelihood of subject {i} is NaN")));
        }
        out.push(ll);
    }
    Ok(out)
}

/// Full-data log-likelihood.
pub fn log_likelihood(state: &ParameterState, data: &SurvivalDataset, spec: &ModelSpec) -> Result<f64> {
    Ok(pointwise_log_likelihood(state, data, spec)?.iter().sum())
}
