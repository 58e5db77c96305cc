use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::Result;
use crate::model::types::{HyperParams, ModelSpec, MrfGraph, ParameterState, Selection, SurvivalDataset};
use crate::samplers::{gibbs_draw_beta, gibbs_draw_invgamma};

fn ig_mean(a: f64, b: f64) -> f64 {
    if a > 1.0 {
        b / (a - 1.0)
    } else {
        b
    }
}

/// Starting point of a chain: ξ₀ = ln(events / Σt), every other coefficient
/// zero, κ = 1, indicators active independently with probability 0.5,
/// variances and probabilities at their prior means.
pub fn initial_state<R: Rng + ?Sized>(data: &SurvivalDataset, spec: &ModelSpec, rng: &mut R) -> ParameterState {
    let h = &spec.hyper;
    let p = data.p_per_type();
    let mut s = ParameterState::zeros(data.d(), &p);
    let events = data.event_count() as f64;
    let total_time: f64 = data.time.iter().sum();
    s.xi0 = if events > 0.0 { (events / total_time).ln() } else { 0.0 };
    s.v2 = ig_mean(h.a_v, h.b_v);
    s.v02 = ig_mean(h.a_v0, h.b_v0);
    s.tau02 = ig_mean(h.a_tau0, h.b_tau0);
    s.w02 = ig_mean(h.a_w0, h.b_w0);
    s.tau2.fill(ig_mean(h.a_tau, h.b_tau));
    s.w2.fill(ig_mean(h.a_w, h.b_w));
    let selection = spec.variant.selection();
    for (l, &pl) in p.iter().enumerate() {
        let pi = h.a_pi / (h.a_pi + h.b_pi_for(pl));
        let rho = h.a_rho / (h.a_rho + h.b_rho_for(pl));
        s.pi[l].fill(pi);
        s.rho[l].fill(rho);
        for j in 0..pl {
            if selection != Selection::None {
                s.gamma[l][j] = rng.random_bool(0.5);
                if spec.variant.has_measurement_error() {
                    s.eta[l][j] = rng.random_bool(0.5);
                }
            }
        }
    }
    s
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Exact MRF draw by enumeration for small graphs, otherwise the state
/// after a long single-site Gibbs run.
fn draw_mrf<R: Rng + ?Sized>(graph: &MrfGraph, rng: &mut R) -> Vec<bool> {
    let k = graph.dim();
    if k <= 16 {
        let configs: Vec<Vec<bool>> = (0u32..1 << k).map(|m| (0..k).map(|i| m >> i & 1 == 1).collect()).collect();
        let logw: Vec<f64> = configs
            .iter()
            .map(|g| graph.a * g.iter().filter(|&&x| x).count() as f64 + graph.b * graph.quadratic_form(g))
            .collect();
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|x| (x - max).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (g, wi) in configs.iter().zip(&w) {
            if u < *wi {
                return g.clone();
            }
            u -= wi;
        }
        return configs.last().unwrap().clone();
    }
    let mut g: Vec<bool> = (0..k).map(|_| rng.random_bool(logistic(graph.a))).collect();
    for _ in 0..1000 {
        for i in 0..k {
            let linked: f64 = graph.neighbors(i).iter().filter(|(j, _)| g[*j]).map(|(_, w)| w).sum();
            g[i] = rng.random_bool(logistic(graph.a + 2.0 * graph.b * linked));
        }
    }
    g
}

fn split(flat: Vec<bool>, p: &[usize]) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    let mut k = 0;
    for &pl in p {
        out.push(flat[k..k + pl].to_vec());
        k += pl;
    }
    out
}

fn draw_normal<R: Rng + ?Sized>(var: f64, rng: &mut R) -> f64 {
    Normal::new(0.0, var.sqrt()).expect("positive variance").sample(rng)
}

fn draw_indicators<R: Rng + ?Sized>(
    selection: Selection,
    graph: Option<&MrfGraph>,
    probs: &mut [Vec<f64>],
    a: f64,
    b_for: impl Fn(usize) -> f64,
    p: &[usize],
    rng: &mut R,
) -> Result<Vec<Vec<bool>>> {
    Ok(match selection {
        Selection::None => p.iter().map(|&pl| vec![true; pl]).collect(),
        Selection::Bernoulli => {
            let mut out = Vec::new();
            for (l, &pl) in p.iter().enumerate() {
                let mut flags = Vec::with_capacity(pl);
                for j in 0..pl {
                    probs[l][j] = gibbs_draw_beta(a, b_for(pl), rng)?;
                    flags.push(rng.random_bool(probs[l][j]));
                }
                out.push(flags);
            }
            out
        }
        Selection::Mrf => split(draw_mrf(graph.expect("validated spec"), rng), p),
    })
}

/// An exact joint draw from the prior, for dimensions `d` and `p`.
pub fn draw_from_prior<R: Rng + ?Sized>(spec: &ModelSpec, d: usize, p: &[usize], rng: &mut R) -> Result<ParameterState> {
    spec.validate()?;
    let h: &HyperParams = &spec.hyper;
    let mut s = ParameterState::zeros(d, p);
    s.v02 = gibbs_draw_invgamma(h.a_v0, h.b_v0, rng)?;
    s.v2 = gibbs_draw_invgamma(h.a_v, h.b_v, rng)?;
    s.xi0 = draw_normal(s.v02, rng);
    for x in s.xi.iter_mut() {
        *x = draw_normal(s.v2, rng);
    }
    s.kappa = Gamma::new(h.a_kappa, 1.0 / h.b_kappa).expect("validated").sample(rng);
    let selection = spec.variant.selection();
    s.tau02 = gibbs_draw_invgamma(h.a_tau0, h.b_tau0, rng)?;
    for l in 0..p.len() {
        s.tau2[l] = gibbs_draw_invgamma(h.a_tau, h.b_tau, rng)?;
        s.beta0[l] = draw_normal(s.tau02, rng);
    }
    s.gamma = draw_indicators(selection, spec.graph_beta.as_ref(), &mut s.pi, h.a_pi, |pl| h.b_pi_for(pl), p, rng)?;
    for l in 0..p.len() {
        for j in 0..p[l] {
            if s.gamma[l][j] {
                s.beta[l][j] = draw_normal(s.tau2[l], rng);
            }
        }
    }
    if spec.variant.has_measurement_error() {
        s.w02 = gibbs_draw_invgamma(h.a_w0, h.b_w0, rng)?;
        for l in 0..p.len() {
            s.w2[l] = gibbs_draw_invgamma(h.a_w, h.b_w, rng)?;
            s.zeta0[l] = draw_normal(s.w02, rng);
        }
        s.eta = draw_indicators(selection, spec.graph_zeta.as_ref(), &mut s.rho, h.a_rho, |pl| h.b_rho_for(pl), p, rng)?;
        for l in 0..p.len() {
            for j in 0..p[l] {
                if s.eta[l][j] {
                    s.zeta[l][j] = draw_normal(s.w2[l], rng);
                }
            }
        }
    }
    Ok(s)
}
