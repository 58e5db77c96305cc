use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::init::initial_state;
use super::output::{push_state, ChainOutput, Incident, Trace};
use super::RunConfig;
use crate::error::{GptcmError, Result};
use crate::model::cache::ModelCache;
use crate::model::conditionals::{commit, conditional_at, conjugate_posteriors, Coord};
use crate::model::types::{ModelSpec, ParameterState, Selection, SurvivalDataset};
use crate::samplers::{
    arms_sample, gibbs_draw_beta, gibbs_draw_invgamma, metropolis_accept, propose_flip, slice_sample, stream_rng,
    ArmsOptions, Block, LogDensity, SamplerDiagnostics, StreamRng,
};

/// Diagnostic counter groups.
#[derive(Clone, Copy)]
enum Group {
    Variance,
    Xi,
    Zeta,
    Kappa,
    Beta,
    Gamma,
    Eta,
}

const GROUP_NAMES: [&str; 7] = ["variance", "xi", "zeta", "kappa", "beta", "gamma", "eta"];

struct Streams {
    variance: StreamRng,
    xi: StreamRng,
    zeta: StreamRng,
    kappa: StreamRng,
    beta: StreamRng,
    indicator: StreamRng,
}

struct Chain<'a> {
    spec: &'a ModelSpec,
    data: &'a SurvivalDataset,
    cfg: &'a RunConfig,
    state: ParameterState,
    cache: ModelCache,
    rng: Streams,
    diag: [SamplerDiagnostics; 7],
    arms: ArmsOptions,
    offsets: Vec<usize>,
    incidents: Vec<Incident>,
    clamp_base: usize,
    iteration: usize,
    log: Option<Vec<String>>,
    step_log: Vec<String>,
}

fn invgamma(params: crate::model::conditionals::InvGammaParams, rng: &mut StreamRng) -> Result<f64> {
    gibbs_draw_invgamma(params.shape, params.rate, rng)
}

impl<'a> Chain<'a> {
    fn note(&mut self, step: impl FnOnce() -> String) {
        if let Some(log) = self.log.as_mut() {
            log.push(step());
        }
    }

    fn use_likelihood(&self) -> bool {
        !self.cfg.prior_only
    }

    fn selection(&self) -> Selection {
        self.spec.variant.selection()
    }

    /// Runs one block update; on a numerical failure the block is reverted,
    /// the cache rebuilt and an incident recorded.
    fn guarded(&mut self, block: &str, f: impl FnOnce(&mut Self) -> Result<()>) -> Result<()> {
        let snapshot = self.state.clone();
        let outcome = f(self);
        let failure = match outcome {
            Ok(()) => {
                let ll = self.cache.total_loglik();
                if self.use_likelihood() && !ll.is_finite() {
                    Some(format!("log-likelihood {ll} after update"))
                } else {
                    None
                }
            }
            Err(e @ (GptcmError::Sampler(_) | GptcmError::Domain(_) | GptcmError::Contract(_))) => Some(e.to_string()),
            Err(e) => return Err(e),
        };
        if let Some(message) = failure {
            self.state = snapshot;
            self.rebuild_cache();
            self.incidents.push(Incident {
                iteration: self.iteration,
                block: block.to_string(),
                message,
            });
            if self.incidents.len() > self.cfg.max_incidents {
                return Err(GptcmError::Convergence(format!(
                    "more than {} numerical incidents; last in block {block} at iteration {}",
                    self.cfg.max_incidents, self.iteration
                )));
            }
        }
        Ok(())
    }

    fn rebuild_cache(&mut self) {
        self.clamp_base += self.cache.clamp_events();
        self.cache = ModelCache::new(&self.state, self.data, self.spec, self.use_likelihood());
    }

    fn slice_coord(&mut self, coord: Coord, lower: f64, group: Group) -> Result<()> {
        let x0 = coord.get(&self.state);
        let (cache, data, state, hyper) = (&self.cache, self.data, &self.state, &self.spec.hyper);
        let mut ld = LogDensity::with_bounds(|x| conditional_at(cache, data, state, hyper, coord, x), lower, f64::INFINITY);
        let rng = match group {
            Group::Kappa => &mut self.rng.kappa,
            _ => &mut self.rng.xi,
        };
        let x = slice_sample(
            &mut ld,
            x0,
            self.cfg.slice_width,
            self.cfg.slice_max_steps,
            rng,
            &mut self.diag[group as usize],
        )?;
        commit(&mut self.cache, self.data, &mut self.state, coord, x);
        Ok(())
    }

    fn arms_coord(&mut self, coord: Coord, group: Group) -> Result<()> {
        let x0 = coord.get(&self.state);
        let sd = coord.prior_variance(&self.state).expect("gaussian coordinate").sqrt();
        // The abscissae must not depend on x0: for conditionals that are not
        // log-concave a current-centred hull breaks detailed balance.
        let init = [-2.0 * sd, -sd, 0.0, sd, 2.0 * sd];
        let (cache, data, state, hyper) = (&self.cache, self.data, &self.state, &self.spec.hyper);
        let mut ld = LogDensity::new(|x| conditional_at(cache, data, state, hyper, coord, x));
        let rng = match group {
            Group::Zeta => &mut self.rng.zeta,
            _ => &mut self.rng.beta,
        };
        let x = arms_sample(&mut ld, &init, Some(x0), &self.arms, rng, &mut self.diag[group as usize]).map_err(|e| match e {
            GptcmError::Sampler(m) => GptcmError::Sampler(format!("{coord:?}: {m}")),
            e => e,
        })?;
        commit(&mut self.cache, self.data, &mut self.state, coord, x);
        Ok(())
    }

    /// Single-flip spike-and-slab move on block `l` of γ (`zeta = false`)
    /// or η (`zeta = true`).
    fn indicator_move(&mut self, l: usize, zeta: bool) -> Result<()> {
        let flags = if zeta { &self.state.eta[l] } else { &self.state.gamma[l] };
        let Some(prop) = propose_flip(flags, &mut self.rng.indicator) else {
            return Ok(());
        };
        let j = prop.index;
        let (coord, var, prob, graph) = if zeta {
            (Coord::Zeta(l, j), self.state.w2[l], self.state.rho[l][j], self.spec.graph_zeta.as_ref())
        } else {
            (Coord::Beta(l, j), self.state.tau2[l], self.state.pi[l][j], self.spec.graph_beta.as_ref())
        };
        let old = coord.get(&self.state);
        let new = if prop.to_active {
            Normal::new(0.0, var.sqrt())
                .map_err(|e| GptcmError::Domain(e.to_string()))?
                .sample(&mut self.rng.indicator)
        } else {
            0.0
        };
        let log_prior_ratio = match self.selection() {
            Selection::Bernoulli => {
                let log_odds = prob.ln() - (-prob).ln_1p();
                if prop.to_active {
                    log_odds
                } else {
                    -log_odds
                }
            }
            Selection::Mrf => {
                let graph = graph.ok_or_else(|| GptcmError::Config("MRF variant without graph".into()))?;
                let flat = if zeta { self.state.eta_flat() } else { self.state.gamma_flat() };
                graph.flip_delta(&flat, self.offsets[l] + j)
            }
            Selection::None => return Ok(()),
        };
        let column = self.data.cell_covariates[l].column(j);
        let x = Some(column.as_slice());
        let log_lik_ratio = if zeta {
            self.cache.loglik_alpha_shift(l, x, new - old) - self.cache.survival_and_dirichlet_loglik()
        } else {
            self.cache.loglik_mu_shift(l, x, new - old) - self.cache.survival_loglik()
        };
        let group = if zeta { Group::Eta } else { Group::Gamma };
        self.diag[group as usize].proposals += 1;
        if metropolis_accept(log_prior_ratio + log_lik_ratio, &mut self.rng.indicator) {
            self.diag[group as usize].acceptances += 1;
            if zeta {
                self.state.eta[l][j] = prop.to_active;
            } else {
                self.state.gamma[l][j] = prop.to_active;
            }
            commit(&mut self.cache, self.data, &mut self.state, coord, new);
        }
        Ok(())
    }

    fn variance_gibbs_xi(&mut self) -> Result<()> {
        let post = conjugate_posteriors(&self.state, &self.spec.hyper, self.selection());
        self.state.v02 = invgamma(post.v02, &mut self.rng.variance)?;
        self.note(|| "gibbs v02".into());
        self.state.v2 = invgamma(post.v2, &mut self.rng.variance)?;
        self.note(|| "gibbs v2".into());
        self.diag[Group::Variance as usize].proposals += 2;
        self.diag[Group::Variance as usize].acceptances += 2;
        Ok(())
    }

    /// Steps for ξ₀ and ξ.
    fn update_xi(&mut self) -> Result<()> {
        if self.cfg.frozen.xi {
            return Ok(());
        }
        self.guarded("v2", |c| c.variance_gibbs_xi())?;
        self.guarded("xi", |c| {
            c.slice_coord(Coord::Xi0, f64::NEG_INFINITY, Group::Xi)?;
            c.note(|| "slice xi0".into());
            for k in 0..c.state.xi.len() {
                c.slice_coord(Coord::Xi(k), f64::NEG_INFINITY, Group::Xi)?;
                c.note(|| format!("slice xi[{}]", k + 1));
            }
            Ok(())
        })?;
        self.note(|| "refresh theta".into());
        Ok(())
    }

    /// Gibbs draws of the selection probabilities (Bernoulli variants).
    fn update_probabilities(&mut self, zeta: bool) -> Result<()> {
        if self.selection() != Selection::Bernoulli || self.cfg.frozen.probabilities {
            return Ok(());
        }
        let post = conjugate_posteriors(&self.state, &self.spec.hyper, self.selection());
        let params = if zeta { &post.rho } else { &post.pi };
        for (l, block) in params.iter().enumerate() {
            for (j, bp) in block.iter().enumerate() {
                let v = gibbs_draw_beta(bp.a, bp.b, &mut self.rng.variance)?;
                if zeta {
                    self.state.rho[l][j] = v;
                } else {
                    self.state.pi[l][j] = v;
                }
            }
        }
        self.note(|| if zeta { "gibbs rho".into() } else { "gibbs pi".into() });
        Ok(())
    }

    fn update_coef_variances(&mut self, l: usize, zeta: bool) -> Result<()> {
        if self.cfg.frozen.coefficient_variances {
            return Ok(());
        }
        let post = conjugate_posteriors(&self.state, &self.spec.hyper, self.selection());
        if zeta {
            self.state.w2[l] = invgamma(post.w2[l], &mut self.rng.variance)?;
            self.note(|| format!("gibbs w2[{}]", l + 1));
            self.state.w02 = invgamma(post.w02, &mut self.rng.variance)?;
            self.note(|| "gibbs w02".into());
        } else {
            self.state.tau2[l] = invgamma(post.tau2[l], &mut self.rng.variance)?;
            self.note(|| format!("gibbs tau2[{}]", l + 1));
            self.state.tau02 = invgamma(post.tau02, &mut self.rng.variance)?;
            self.note(|| "gibbs tau02".into());
        }
        self.diag[Group::Variance as usize].proposals += 2;
        self.diag[Group::Variance as usize].acceptances += 2;
        Ok(())
    }

    fn active(&self, l: usize, zeta: bool) -> Vec<usize> {
        let all = self.selection() == Selection::None;
        let flags = if zeta { &self.state.eta[l] } else { &self.state.gamma[l] };
        (0..flags.len()).filter(|&j| all || flags[j]).collect()
    }

    /// ARMS over the active coefficients of block `l`, plus the intercept
    /// when requested.
    fn arms_block(&mut self, l: usize, zeta: bool, intercept: bool) -> Result<()> {
        let group = if zeta { Group::Zeta } else { Group::Beta };
        for j in self.active(l, zeta) {
            let coord = if zeta { Coord::Zeta(l, j) } else { Coord::Beta(l, j) };
            self.arms_coord(coord, group)?;
        }
        if intercept && !self.cfg.frozen.intercepts {
            let coord = if zeta { Coord::Zeta0(l) } else { Coord::Beta0(l) };
            self.arms_coord(coord, group)?;
        }
        Ok(())
    }

    /// The η/ζ (`zeta = true`) or γ/β half of the sweep.
    fn update_regression(&mut self, zeta: bool) -> Result<()> {
        let big_l = self.state.n_types();
        let l = self.rng.indicator.random_range(0..big_l);
        let (ind, coef) = if zeta { ("eta", "zeta") } else { ("gamma", "beta") };
        if self.selection() != Selection::None {
            self.guarded(ind, |c| c.indicator_move(l, zeta))?;
            self.note(|| format!("indicator {ind}[{}]", l + 1));
            self.guarded(if zeta { "rho" } else { "pi" }, |c| c.update_probabilities(zeta))?;
        }
        self.guarded(if zeta { "w2" } else { "tau2" }, |c| c.update_coef_variances(l, zeta))?;
        self.guarded(coef, |c| c.arms_block(l, zeta, true))?;
        self.note(|| format!("arms {coef}[{}] and {coef}0[{}]", l + 1, l + 1));
        self.guarded(coef, |c| {
            for m in 0..big_l {
                c.arms_block(m, zeta, false)?;
            }
            Ok(())
        })?;
        self.note(|| format!("arms {coef} all"));
        self.note(|| if zeta { "refresh p".into() } else { "refresh mu".into() });
        Ok(())
    }

    fn update_kappa(&mut self) -> Result<()> {
        if self.cfg.frozen.kappa {
            return Ok(());
        }
        self.guarded("kappa", |c| c.slice_coord(Coord::Kappa, 0.0, Group::Kappa))?;
        self.note(|| "slice kappa".into());
        self.note(|| "refresh lambda".into());
        Ok(())
    }

    fn sweep(&mut self) -> Result<()> {
        self.update_xi()?;
        if self.spec.variant.has_measurement_error() {
            self.update_regression(true)?;
        }
        self.update_kappa()?;
        self.update_regression(false)?;
        Ok(())
    }

    fn resync(&mut self) {
        let fresh = ModelCache::new(&self.state, self.data, self.spec, self.use_likelihood());
        if cfg!(debug_assertions) {
            let drift = self.cache.max_discrepancy(&fresh);
            if drift > 1e-10 {
                self.incidents.push(Incident {
                    iteration: self.iteration,
                    block: "cache".into(),
                    message: format!("incremental cache drifted by {drift:e} from a full recomputation"),
                });
            }
        }
        self.clamp_base += self.cache.clamp_events();
        self.cache = fresh;
    }
}

#[cfg(not(target_arch = "wasm32"))]
fn now() -> Option<std::time::Instant> {
    Some(std::time::Instant::now())
}

#[cfg(target_arch = "wasm32")]
fn now() -> Option<()> {
    None
}

#[cfg(not(target_arch = "wasm32"))]
fn elapsed(t: Option<std::time::Instant>) -> f64 {
    t.map_or(0.0, |t| t.elapsed().as_secs_f64())
}

#[cfg(target_arch = "wasm32")]
fn elapsed(_: Option<()>) -> f64 {
    0.0
}

/// Runs one chain from the default initialization.
pub fn run_chain(spec: &ModelSpec, data: &SurvivalDataset, cfg: &RunConfig, chain_id: usize) -> Result<ChainOutput> {
    cfg.validate()?;
    let (seed, id) = cfg.chain_stream(chain_id);
    let mut rng = stream_rng(seed, id, Block::Init);
    let init = initial_state(data, spec, &mut rng);
    run_chain_from(spec, data, cfg, chain_id, init)
}

/// Runs one chain from a given initial state.
pub fn run_chain_from(
    spec: &ModelSpec,
    data: &SurvivalDataset,
    cfg: &RunConfig,
    chain_id: usize,
    init: ParameterState,
) -> Result<ChainOutput> {
    cfg.validate()?;
    spec.validate()?;
    data.validate()?;
    spec.check_data(data)?;
    init.validate(data)?;
    let start = now();
    let (seed, id) = cfg.chain_stream(chain_id);
    let cache = ModelCache::new(&init, data, spec, !cfg.prior_only);
    let mut offsets = Vec::with_capacity(data.n_types());
    let mut acc = 0;
    for p in data.p_per_type() {
        offsets.push(acc);
        acc += p;
    }
    let mut chain = Chain {
        spec,
        data,
        cfg,
        state: init,
        cache,
        rng: Streams {
            variance: stream_rng(seed, id, Block::Variance),
            xi: stream_rng(seed, id, Block::Xi),
            zeta: stream_rng(seed, id, Block::Zeta),
            kappa: stream_rng(seed, id, Block::Kappa),
            beta: stream_rng(seed, id, Block::Beta),
            indicator: stream_rng(seed, id, Block::Indicator),
        },
        diag: [SamplerDiagnostics::default(); 7],
        arms: ArmsOptions {
            shrink_nonfinite: true,
            ..ArmsOptions::default()
        },
        offsets,
        incidents: Vec::new(),
        clamp_base: 0,
        iteration: 0,
        log: None,
        step_log: Vec::new(),
    };

    let variant = spec.variant;
    let p = data.p_per_type();
    let mut traces = ChainOutput::empty_traces(variant, data.d(), &p);
    let mut head = ChainOutput::empty_traces(variant, data.d(), &p);
    for t in traces.iter_mut() {
        t.values.reserve(cfg.n_recorded() * t.width());
    }
    let mut pointwise = cfg
        .record_pointwise
        .then(|| Trace::new("pointwise", (1..=data.n()).map(|i| format!("ll[{i}]")).collect()));
    let mut iterations = Vec::with_capacity(cfg.n_recorded());

    for it in 1..=cfg.n_iterations {
        chain.iteration = it;
        if it <= cfg.trace_iterations {
            chain.log = Some(Vec::new());
        }
        chain.sweep()?;
        if let Some(log) = chain.log.take() {
            chain.step_log.extend(log.into_iter().map(|s| format!("{it}: {s}")));
        }
        if cfg.resync_every > 0 && it % cfg.resync_every == 0 {
            chain.resync();
        }
        if it <= cfg.n_warmup {
            if it <= cfg.warmup_head {
                push_state(&mut head, &chain.state, chain.cache.total_loglik());
            }
            continue;
        }
        let k = it - cfg.n_warmup;
        if k % cfg.thin == 0 {
            debug_assert!(chain.state.validate(data).is_ok());
            push_state(&mut traces, &chain.state, chain.cache.total_loglik());
            if let Some(pw) = pointwise.as_mut() {
                pw.push(&chain.cache.pointwise());
            }
            iterations.push(it);
        }
    }

    let clamp_events = chain.clamp_base + chain.cache.clamp_events();
    let diagnostics: BTreeMap<String, SamplerDiagnostics> = GROUP_NAMES
        .iter()
        .zip(chain.diag.iter())
        .map(|(n, d)| (n.to_string(), *d))
        .collect();
    Ok(ChainOutput {
        chain_id,
        variant,
        d: data.d(),
        p,
        iterations,
        traces,
        pointwise,
        warmup_head: head,
        diagnostics,
        incidents: chain.incidents,
        clamp_events,
        step_log: chain.step_log,
        final_state: chain.state,
        elapsed_secs: elapsed(start),
    })
}
