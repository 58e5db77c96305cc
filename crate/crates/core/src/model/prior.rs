use statrs::function::gamma::ln_gamma;

use crate::error::{GptcmError, Result};
use crate::model::types::{MrfGraph, ModelSpec, ParameterState, Selection};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[inline]
pub fn ln_normal(x: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln() + x * x / var)
}

/// Inverse-gamma log density with shape `a` and rate (scale) `b`.
pub fn ln_inv_gamma(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    a * b.ln() - ln_gamma(a) - (a + 1.0) * x.ln() - b / x
}

/// Gamma log density with shape `a` and rate `b`.
pub fn ln_gamma_density(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    a * b.ln() - ln_gamma(a) + (a - 1.0) * x.ln() - b * x
}

pub fn ln_beta_density(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return f64::NEG_INFINITY;
    }
    ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p()
}

/// Unnormalized MRF log mass `a·Σγ + b·γᵀGγ`.
pub fn mrf_log_prior(gamma: &[bool], graph: &MrfGraph) -> Result<f64> {
    if gamma.len() != graph.dim() {
        return Err(GptcmError::Dimension(format!(
            "indicator vector has length {} but graph has dimension {}",
            gamma.len(),
            graph.dim()
        )));
    }
    let active = gamma.iter().filter(|&&g| g).count() as f64;
    Ok(graph.a * active + graph.b * graph.quadratic_form(gamma))
}

/// Log prior mass of an indicator block set under the variant's selection prior
/// (zero for variants without selection). `probs` are π or ρ.
pub fn indicator_log_prior(
    flags: &[Vec<bool>],
    probs: &[Vec<f64>],
    selection: Selection,
    graph: Option<&MrfGraph>,
) -> Result<f64> {
    match selection {
        Selection::None => Ok(0.0),
        Selection::Bernoulli => Ok(flags
            .iter()
            .zip(probs)
            .flat_map(|(f, p)| f.iter().zip(p))
            .map(|(&g, &pi)| if g { pi.ln() } else { (-pi).ln_1p() })
            .sum()),
        Selection::Mrf => {
            let graph = graph.ok_or_else(|| GptcmError::Config("MRF prior requires a graph".into()))?;
            let flat: Vec<bool> = flags.iter().flatten().copied().collect();
            mrf_log_prior(&flat, graph)
        }
    }
}

/// Joint log prior of a state, up to the MRF normalizing constants.
pub fn log_prior(state: &ParameterState, spec: &ModelSpec) -> Result<f64> {
    let h = &spec.hyper;
    let sel = spec.variant.selection();
    let mut lp = ln_inv_gamma(state.v2, h.a_v, h.b_v) + ln_inv_gamma(state.v02, h.a_v0, h.b_v0);
    lp += ln_normal(state.xi0, state.v02);
    lp += state.xi.iter().map(|&x| ln_normal(x, state.v2)).sum::<f64>();
    lp += ln_gamma_density(state.kappa, h.a_kappa, h.b_kappa);
    lp += ln_inv_gamma(state.tau02, h.a_tau0, h.b_tau0);
    for l in 0..state.n_types() {
        lp += ln_normal(state.beta0[l], state.tau02);
        lp += ln_inv_gamma(state.tau2[l], h.a_tau, h.b_tau);
        for (j, &b) in state.beta[l].iter().enumerate() {
            if state.gamma[l][j] || sel == Selection::None {
                lp += ln_normal(b, state.tau2[l]);
            }
            if sel == Selection::Bernoulli {
                lp += ln_beta_density(state.pi[l][j], h.a_pi, h.b_pi_for(state.beta[l].len()));
            }
        }
    }
    if sel != Selection::None {
        lp += indicator_log_prior(&state.gamma, &state.pi, sel, spec.graph_beta.as_ref())?;
    }
    if spec.variant.has_measurement_error() {
        lp += ln_inv_gamma(state.w02, h.a_w0, h.b_w0);
        for l in 0..state.n_types() {
            lp += ln_normal(state.zeta0[l], state.w02);
            lp += ln_inv_gamma(state.w2[l], h.a_w, h.b_w);
            for (j, &z) in state.zeta[l].iter().enumerate() {
                if state.eta[l][j] || sel == Selection::None {
                    lp += ln_normal(z, state.w2[l]);
                }
                if sel == Selection::Bernoulli {
                    lp += ln_beta_density(state.rho[l][j], h.a_rho, h.b_rho_for(state.zeta[l].len()));
                }
            }
        }
        if sel != Selection::None {
            lp += indicator_log_prior(&state.eta, &state.rho, sel, spec.graph_zeta.as_ref())?;
        }
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logit(p: f64) -> f64 {
        (p / (1.0 - p)).ln()
    }

    #[test]
    fn mrf_zero_vector() {
        let g = MrfGraph::new(4, &[(0, 1, 1.0), (2, 3, 0.5)], -2.0, 1.0).unwrap();
        assert_eq!(mrf_log_prior(&[false; 4], &g).unwrap(), 0.0);
    }

    #[test]
    fn mrf_two_linked_active() {
        let g = MrfGraph::new(2, &[(0, 1, 1.0)], -2.0, 1.0).unwrap();
        assert_eq!(mrf_log_prior(&[true, true], &g).unwrap(), -2.0);
        assert_eq!(g.quadratic_form(&[true, true]), 2.0);
    }

    #[test]
    fn mrf_without_smoothing_is_independent_bernoulli() {
        let a = logit(0.1);
        let g = MrfGraph::new(8, &[(0, 1, 1.0), (1, 5, 0.5), (3, 7, 1.0)], a, 0.0).unwrap();
        let configs: Vec<Vec<bool>> = (0u32..256).map(|m| (0..8).map(|k| m >> k & 1 == 1).collect()).collect();
        for x in &configs {
            for y in configs.iter().step_by(17) {
                let lhs = mrf_log_prior(x, &g).unwrap() - mrf_log_prior(y, &g).unwrap();
                let sx = x.iter().filter(|&&v| v).count() as f64;
                let sy = y.iter().filter(|&&v| v).count() as f64;
                assert!((lhs - a * (sx - sy)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mrf_flip_delta_matches_difference() {
        let g = MrfGraph::new(5, &[(0, 1, 1.0), (1, 2, 0.5), (0, 4, 1.0), (3, 4, 0.25)], -1.3, 0.7).unwrap();
        for m in 0u32..32 {
            let x: Vec<bool> = (0..5).map(|k| m >> k & 1 == 1).collect();
            for k in 0..5 {
                let mut y = x.clone();
                y[k] = !y[k];
                let diff = mrf_log_prior(&y, &g).unwrap() - mrf_log_prior(&x, &g).unwrap();
                assert!((g.flip_delta(&x, k) - diff).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mrf_dimension_mismatch() {
        let g = MrfGraph::new(3, &[], 0.0, 0.0).unwrap();
        assert!(mrf_log_prior(&[true, false], &g).is_err());
    }

    #[test]
    fn graph_rejects_bad_input() {
        assert!(MrfGraph::new(3, &[(0, 0, 1.0)], 0.0, 0.0).is_err());
        assert!(MrfGraph::new(3, &[(0, 1, 1.5)], 0.0, 0.0).is_err());
        assert!(MrfGraph::new(3, &[(0, 1, 1.0)], 0.0, -1.0).is_err());
        assert!(MrfGraph::new(3, &[(0, 1, 1.0), (1, 0, 0.5)], 0.0, 0.0).is_err());
        let g = MrfGraph::new(3, &[(0, 1, 1.0), (1, 0, 1.0)], 0.0, 0.0).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn densities_normalize() {
        // crude Riemann sums
        let h = 1e-3;
        let s: f64 = (1..100_000).map(|k| ln_inv_gamma(k as f64 * h, 5.0, 20.0).exp() * h).sum();
        assert!((s - 1.0).abs() < 1e-3, "{s}");
        let s: f64 = (1..10_000).map(|k| ln_beta_density(k as f64 * 1e-4, 2.0, 3.0).exp() * 1e-4).sum();
        assert!((s - 1.0).abs() < 1e-3, "{s}");
    }
}
