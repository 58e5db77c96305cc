//! Small fixtures and exact oracles for the MCMC engine, shared by the
//! engine tests and the acceptance report.

use super::ks_statistic;
use gptcm::mcmc::{draw_from_prior, run_chain_from, FrozenBlocks, RunConfig};
use gptcm::model::{HyperParams, ModelSpec, MrfGraph, ParameterState, Selection, SurvivalDataset, Variant};
use gptcm::samplers::{stream_rng, Block};
use gptcm::simulation::{resimulate_outcomes, CensoringDesign};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, InverseGamma, StudentsT};

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Covariates only; outcomes are filled in by `resimulate_outcomes`.
pub fn design(n: usize, d: usize, p: usize, big_l: usize, seed: u64) -> SurvivalDataset {
    let mut rng = stream_rng(seed, 0, Block::Other);
    let mut normal = |r, c| DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
    let clinical = normal(n, d);
    let cells = (0..big_l).map(|_| normal(n, p)).collect();
    SurvivalDataset::new(
        vec![1.0; n],
        vec![false; n],
        clinical,
        cells,
        DMatrix::from_element(n, big_l, 1.0 / big_l as f64),
    )
    .unwrap()
}

pub fn tiny_graph(p: usize, big_l: usize, a: f64, b: f64) -> MrfGraph {
    let mut edges = Vec::new();
    for l in 0..big_l {
        for j in 0..p - 1 {
            edges.push((l * p + j, l * p + j + 1, 1.0));
        }
    }
    for j in 0..p {
        for l in 1..big_l {
            edges.push((j, l * p + j, 0.5));
        }
    }
    MrfGraph::new(p * big_l, &edges, a, b).unwrap()
}

pub fn truth_state(d: usize, p: usize, big_l: usize) -> ParameterState {
    let mut s = ParameterState::zeros(d, &vec![p; big_l]);
    s.xi0 = 0.5;
    s.xi = (0..d).map(|k| if k % 2 == 0 { 0.4 } else { -0.3 }).collect();
    s.kappa = 1.5;
    s.beta[0][0] = 1.0;
    s.zeta[0][0] = 0.8;
    s.zeta0 = (0..big_l).map(|l| 0.2 * l as f64).collect();
    s.gamma = s.beta.iter().map(|r| r.iter().map(|&b| b != 0.0).collect()).collect();
    s.eta = s.zeta.iter().map(|r| r.iter().map(|&b| b != 0.0).collect()).collect();
    s
}

pub fn fixture(variant: Variant, n: usize, seed: u64) -> (ModelSpec, SurvivalDataset) {
    let (d, p, big_l) = (2, 2, 2);
    let base = design(n, d, p, big_l, seed);
    let mut rng = stream_rng(seed, 1, Block::Other);
    let data = resimulate_outcomes(&truth_state(d, p, big_l), &base, variant, &CensoringDesign::default(), &mut rng)
        .unwrap();
    let g = tiny_graph(p, big_l, -1.0, 0.5);
    let spec = ModelSpec::new(variant);
    let spec = match variant.selection() {
        Selection::Mrf => {
            let zeta = variant.has_measurement_error().then(|| g.clone());
            spec.with_graphs(Some(g), zeta)
        }
        _ => spec,
    };
    (spec, data)
}

pub fn short(n_iterations: usize, n_warmup: usize) -> RunConfig {
    RunConfig {
        n_iterations,
        n_warmup,
        ..RunConfig::default()
    }
}

/// Per-subject mixture pieces `(p_l S_l(t_i), p_l f_l(t_i))` of one block.
pub fn pieces(data: &SurvivalDataset, s: &ParameterState, l: usize, beta: &[f64]) -> Vec<(f64, f64)> {
    let x = &data.cell_covariates[l];
    let k = s.kappa;
    let g = statrs::function::gamma::gamma(1.0 + 1.0 / k);
    (0..data.n())
        .map(|i| {
            let lin: f64 = s.beta0[l] + (0..beta.len()).map(|j| x[(i, j)] * beta[j]).sum::<f64>();
            let lambda = lin.exp() / g;
            let t = data.time[i];
            let z = (t / lambda).powf(k);
            let surv = (-z).exp();
            let dens = k / t * z * surv;
            let p = data.proportions[(i, l)];
            (p * surv, p * dens)
        })
        .collect()
}

pub fn ln_normal(x: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + x * x / var)
}

/// Quadrature nodes `(ln weight, pieces)` for block `l` with active set
/// `mask`. The weight includes the slab density.
pub fn block_nodes(data: &SurvivalDataset, s: &ParameterState, l: usize, mask: &[bool], grid: &[f64]) -> Vec<(f64, Vec<(f64, f64)>)> {
    let h = grid[1] - grid[0];
    let active: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
    let mut out = Vec::new();
    let count = grid.len().pow(active.len() as u32);
    for idx in 0..count {
        let mut beta = vec![0.0; mask.len()];
        let mut lw = 0.0;
        let mut r = idx;
        for &j in &active {
            let v = grid[r % grid.len()];
            r /= grid.len();
            beta[j] = v;
            lw += ln_normal(v, s.tau2[l]) + h.ln();
        }
        out.push((lw, pieces(data, s, l, &beta)));
    }
    out
}

/// Chain frequencies and exact posterior probabilities of the 16 indicator
/// configurations of the tiny MRF1 model with everything but β and γ frozen.
pub fn indicator_enumeration() -> (Vec<f64>, Vec<f64>) {
    let (p, big_l) = (2, 2);
    let (_, data) = fixture(Variant::Mrf1, 20, 11);
    let graph = tiny_graph(p, big_l, -1.0, 0.5);
    let spec = ModelSpec::new(Variant::Mrf1).with_graphs(Some(graph.clone()), None);
    let mut init = truth_state(2, p, big_l);
    init.tau2 = vec![1.0; big_l];
    init.zeta = vec![vec![0.0; p]; big_l];
    init.eta = vec![vec![false; p]; big_l];
    init.zeta0 = vec![0.0; big_l];

    let grid: Vec<f64> = (0..61).map(|k| -4.0 + 8.0 * k as f64 / 60.0).collect();
    let masks: Vec<Vec<bool>> = (0..4).map(|m| vec![m & 1 == 1, m & 2 == 2]).collect();
    let theta: Vec<f64> = (0..data.n())
        .map(|i| (init.xi0 + init.xi[0] * data.clinical[(i, 0)] + init.xi[1] * data.clinical[(i, 1)]).exp())
        .collect();
    let nodes: Vec<Vec<Vec<(f64, Vec<(f64, f64)>)>>> = (0..big_l)
        .map(|l| masks.iter().map(|m| block_nodes(&data, &init, l, m, &grid)).collect())
        .collect();
    // the oracle's likelihood must agree with the library's
    {
        let mut probe = init.clone();
        probe.beta = vec![vec![0.7, -0.4], vec![0.2, 0.9]];
        probe.gamma = vec![vec![true; 2]; 2];
        let a = pieces(&data, &probe, 0, &probe.beta[0]);
        let b = pieces(&data, &probe, 1, &probe.beta[1]);
        let mut ll = 0.0;
        for i in 0..data.n() {
            ll -= theta[i] * (1.0 - a[i].0 - b[i].0);
            if data.event[i] {
                ll += (theta[i] * (a[i].1 + b[i].1)).ln();
            }
        }
        let lib = gptcm::model::log_likelihood(&probe, &data, &spec).unwrap();
        assert!((ll - lib).abs() < 1e-9, "oracle {ll} vs library {lib}");
    }
    let mut log_post = vec![0.0; 16];
    for (cfg, lp) in log_post.iter_mut().enumerate() {
        let (m1, m2) = (cfg & 3, cfg >> 2);
        let flat = [masks[m1][0], masks[m1][1], masks[m2][0], masks[m2][1]];
        let prior = graph.a * flat.iter().filter(|&&g| g).count() as f64 + graph.b * graph.quadratic_form(&flat);
        let mut terms = Vec::new();
        for (w1, a) in &nodes[0][m1] {
            for (w2, b) in &nodes[1][m2] {
                let mut ll = 0.0;
                for i in 0..data.n() {
                    let surv = a[i].0 + b[i].0;
                    ll -= theta[i] * (1.0 - surv);
                    if data.event[i] {
                        ll += (theta[i] * (a[i].1 + b[i].1)).ln();
                    }
                }
                terms.push(w1 + w2 + ll);
            }
        }
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        *lp = prior + max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    }
    let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_post.iter().map(|v| (v - max).exp()).sum();
    let exact: Vec<f64> = log_post.iter().map(|v| (v - max).exp() / z).collect();

    let cfg = RunConfig {
        frozen: FrozenBlocks {
            xi: true,
            kappa: true,
            intercepts: true,
            coefficient_variances: true,
            probabilities: true,
        },
        ..short(60_000, 2_000)
    };
    let out = run_chain_from(&spec, &data, &cfg, 0, init).unwrap();
    let gamma = out.trace("gamma").unwrap();
    let mut freq = vec![0.0; 16];
    for r in 0..gamma.len() {
        let row = gamma.row(r);
        let code = row.iter().enumerate().map(|(k, &g)| (g as usize) << k).sum::<usize>();
        freq[code] += 1.0 / gamma.len() as f64;
    }
    (freq, exact)
}

pub fn geweke_hyper() -> HyperParams {
    let mut h = HyperParams::default();
    for (a, b) in [
        (&mut h.a_v, &mut h.b_v),
        (&mut h.a_v0, &mut h.b_v0),
        (&mut h.a_tau, &mut h.b_tau),
        (&mut h.a_tau0, &mut h.b_tau0),
        (&mut h.a_w, &mut h.b_w),
        (&mut h.a_w0, &mut h.b_w0),
    ] {
        *a = 5.0;
        *b = 1.0;
    }
    h.a_kappa = 5.0;
    h.b_kappa = 5.0;
    h
}

/// Outcome of the successive-conditional (Geweke) simulation.
pub struct GewekeReport {
    /// KS statistic of each scalar marginal against its prior CDF.
    pub ks: Vec<(String, f64)>,
    /// Indicator marginals that miss the exact MRF prior by more than four
    /// binomial standard errors.
    pub indicator_misses: Vec<String>,
    pub incidents: usize,
}

pub fn geweke(reps: usize) -> GewekeReport {
    let (n, d, p, big_l) = (15, 2, 2, 2);
    let base = design(n, d, p, big_l, 12);
    let g = tiny_graph(p, big_l, -1.0, 0.5);
    let spec = ModelSpec::new(Variant::Mrf2)
        .with_hyper(geweke_hyper())
        .with_graphs(Some(g.clone()), Some(g.clone()));
    let censoring = CensoringDesign {
        uniform_lower: 0.5,
        uniform_upper: 3.0,
        exp_rate: 1e-9,
    };
    let cycles = 5;
    let mut draws: Vec<ParameterState> = Vec::with_capacity(reps);
    let mut incidents = Vec::new();
    for r in 0..reps {
        let mut rng = stream_rng(r as u64, 0, Block::Other);
        let mut state = draw_from_prior(&spec, d, &vec![p; big_l], &mut rng).unwrap();
        for c in 0..cycles {
            let data = resimulate_outcomes(&state, &base, Variant::Mrf2, &censoring, &mut rng).unwrap();
            let cfg = RunConfig {
                seed: (r * cycles + c) as u64,
                warmup_head: 0,
                resync_every: 0,
                ..short(1, 0)
            };
            let out = run_chain_from(&spec, &data, &cfg, 0, state).unwrap();
            incidents.extend(out.incidents);
            state = out.final_state;
        }
        draws.push(state);
    }
    let h = geweke_hyper();
    let t10 = StudentsT::new(0.0, (1.0 / 5.0f64).sqrt(), 10.0).unwrap();
    let ig = InverseGamma::new(5.0, 1.0).unwrap();
    let kappa = GammaDist::new(h.a_kappa, h.b_kappa).unwrap();
    let pick = |f: &dyn Fn(&ParameterState) -> f64| draws.iter().map(f).collect::<Vec<f64>>();
    let checks: Vec<(&str, Vec<f64>, Box<dyn Fn(f64) -> f64>)> = vec![
        ("xi0", pick(&|s| s.xi0), Box::new(move |x| t10.cdf(x))),
        ("xi[1]", pick(&|s| s.xi[0]), Box::new(move |x| t10.cdf(x))),
        ("v02", pick(&|s| s.v02), Box::new(move |x| ig.cdf(x))),
        ("kappa", pick(&|s| s.kappa), Box::new(move |x| kappa.cdf(x))),
        ("beta0[1]", pick(&|s| s.beta0[0]), Box::new(move |x| t10.cdf(x))),
        ("zeta0[2]", pick(&|s| s.zeta0[1]), Box::new(move |x| t10.cdf(x))),
        ("tau2[1]", pick(&|s| s.tau2[0]), Box::new(move |x| ig.cdf(x))),
        ("w02", pick(&|s| s.w02), Box::new(move |x| ig.cdf(x))),
    ];
    let ks = checks.iter().map(|(name, xs, cdf)| (name.to_string(), ks_statistic(xs, cdf))).collect();
    let mut indicator_misses = Vec::new();
    // indicator marginals against the exact MRF prior
    let mut prior_incl = vec![0.0; 4];
    let mut z = 0.0;
    for m in 0u32..16 {
        let flat: Vec<bool> = (0..4).map(|k| m >> k & 1 == 1).collect();
        let w = (g.a * flat.iter().filter(|&&x| x).count() as f64 + g.b * g.quadratic_form(&flat)).exp();
        z += w;
        for k in 0..4 {
            if flat[k] {
                prior_incl[k] += w;
            }
        }
    }
    for k in 0..4 {
        let target = prior_incl[k] / z;
        let fg = draws.iter().filter(|s| s.gamma_flat()[k]).count() as f64 / reps as f64;
        let fe = draws.iter().filter(|s| s.eta_flat()[k]).count() as f64 / reps as f64;
        let tol = 4.0 * (target * (1.0 - target) / reps as f64).sqrt();
        if (fg - target).abs() > tol || (fe - target).abs() > tol {
            indicator_misses.push(format!("indicator {k}: gamma {fg:.4} eta {fe:.4} prior {target:.4}"));
        }
    }
    GewekeReport {
        ks,
        indicator_misses,
        incidents: incidents.len(),
    }
}
