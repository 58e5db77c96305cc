//! Browser bindings for a small end-to-end session: simulate a training and
//! a validation set, fit one model variant, and compare its Brier score
//! with the Kaplan-Meier reference.
//!
//! Every method returns a JSON string for the page to render.

use gptcm::evaluation::{
    brier_score, integrated_brier, kaplan_meier, predict_survival, recovery, summarize, time_grid, BrierPoint,
    PredictionCurve, PredictionMode, PosteriorSummary,
};
use gptcm::mcmc::{run_fit, FitResult, RunConfig};
use gptcm::model::types::{ModelSpec, Selection, SurvivalDataset, Variant};
use gptcm::simulation::{simulate_gptcm_replicate, SimConfig, SimulationTruth};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MRF_B: f64 = 0.2;

#[derive(Serialize)]
struct Curve {
    times: Vec<f64>,
    survival: Vec<f64>,
}

#[derive(Serialize)]
struct SimulateReport {
    n: usize,
    events: usize,
    censored_fraction: f64,
    cured_fraction: f64,
    kaplan_meier: Curve,
}

#[derive(Serialize)]
struct Coefficient {
    name: String,
    truth: f64,
    mean: f64,
    lower: f64,
    upper: f64,
    mpip: Option<f64>,
}

#[derive(Serialize)]
struct FitReport {
    variant: String,
    draws: usize,
    beta_rmse: f64,
    accuracy: Option<f64>,
    sensitivity: Option<f64>,
    specificity: Option<f64>,
    coefficients: Vec<Coefficient>,
    loglik: Vec<f64>,
}

#[derive(Serialize)]
struct EvaluateReport {
    times: Vec<f64>,
    model: Vec<Option<f64>>,
    kaplan_meier: Vec<Option<f64>>,
    integrated_model: Option<f64>,
    integrated_kaplan_meier: Option<f64>,
}

struct Session {
    sim: SimConfig,
    train: SurvivalDataset,
    valid: SurvivalDataset,
    truth: SimulationTruth,
}

/// Demo state shared between calls.
#[wasm_bindgen]
#[derive(Default)]
pub struct Demo {
    session: Option<Session>,
    fit: Option<(FitResult, PosteriorSummary)>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(err)
}

impl Demo {
    /// Simulates `n` training and `n` validation subjects from the
    /// low-dimensional design.
    pub fn run_simulate(&mut self, n: usize, seed: u64) -> Result<String, String> {
        if !(20..=2000).contains(&n) {
            return Err(format!("n must lie in 20..=2000, got {n}"));
        }
        let sim = SimConfig::low_dim().with_n(n).with_seed(seed);
        let (train, truth) = simulate_gptcm_replicate(&sim, 0).map_err(err)?;
        let (valid, _) = simulate_gptcm_replicate(&sim, 1).map_err(err)?;
        let km = kaplan_meier(&train.time, &train.event).map_err(err)?;
        let report = SimulateReport {
            n,
            events: train.event_count(),
            censored_fraction: truth.censoring_fraction(),
            cured_fraction: truth.cured_fraction(),
            kaplan_meier: Curve {
                times: km.times.clone(),
                survival: km.survival.clone(),
            },
        };
        self.session = Some(Session {
            sim,
            train,
            valid,
            truth,
        });
        self.fit = None;
        json(&report)
    }

    pub fn run_fit(&mut self, variant: &str, iterations: usize, warmup: usize, seed: u64) -> Result<String, String> {
        let s = self.session.as_ref().ok_or("simulate a dataset first")?;
        let variant: Variant = variant.parse().map_err(err)?;
        if iterations > 20_000 {
            return Err("at most 20000 iterations in the browser".into());
        }
        let mut spec = ModelSpec::new(variant);
        if variant.selection() == Selection::Mrf {
            let g = s.sim.graph(spec.hyper.mrf_sparsity(), MRF_B).map_err(err)?;
            let gz = variant.has_measurement_error().then(|| g.clone());
            spec = spec.with_graphs(Some(g), gz);
        }
        let cfg = RunConfig {
            n_iterations: iterations,
            n_warmup: warmup,
            seed,
            ..Default::default()
        };
        let fit = run_fit(&spec, &s.train, &cfg, Some(1)).map_err(err)?;
        if !fit.complete {
            return Err(fit.failures.first().map(|f| f.1.clone()).unwrap_or_default());
        }
        let summary = summarize(&fit).map_err(err)?;
        let rec = recovery(&summary, &s.truth.state).map_err(err)?;
        let truth = s.truth.state.beta_flat();
        let coefficients = truth
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let (l, j) = (k / s.sim.p, k % s.sim.p);
                let name = format!("beta[{},{}]", j + 1, l + 1);
                let ps = summary.parameter(&name);
                Coefficient {
                    truth: t,
                    mean: ps.map_or(0.0, |p| p.mean),
                    lower: ps.map_or(0.0, |p| p.lower),
                    upper: ps.map_or(0.0, |p| p.upper),
                    mpip: summary.indicator(&format!("gamma[{},{}]", j + 1, l + 1)).map(|i| i.mpip),
                    name,
                }
            })
            .collect();
        let report = FitReport {
            variant: variant.to_string(),
            draws: summary.n_draws,
            beta_rmse: rec.beta_rmse,
            accuracy: rec.gamma.as_ref().map(|g| g.accuracy),
            sensitivity: rec.gamma.as_ref().and_then(|g| g.sensitivity),
            specificity: rec.gamma.as_ref().and_then(|g| g.specificity),
            coefficients,
            loglik: fit.chains[0].scalar("loglik").unwrap_or_default(),
        };
        self.fit = Some((fit, summary));
        json(&report)
    }

    /// Brier scores of the fitted model and of the training Kaplan-Meier
    /// curve on the validation set, over `points` times up to the 80th
    /// percentile of validation times.
    pub fn run_evaluate(&self, points: usize) -> Result<String, String> {
        let s = self.session.as_ref().ok_or("simulate a dataset first")?;
        let (fit, summary) = self.fit.as_ref().ok_or("fit a model first")?;
        let grid = time_grid(&s.valid.time, 0.8, points).map_err(err)?;
        let mode = PredictionMode::default_for(fit.spec.variant);
        let curve = predict_survival(fit, summary, &s.valid, &grid, mode).map_err(err)?;
        let model = brier_score(&curve, &s.valid.time, &s.valid.event).map_err(err)?;
        let km = kaplan_meier(&s.train.time, &s.train.event).map_err(err)?;
        let reference = PredictionCurve::reference(&km, s.valid.n(), &grid).map_err(err)?;
        let km_scores = brier_score(&reference, &s.valid.time, &s.valid.event).map_err(err)?;
        let scores = |pts: &[BrierPoint]| pts.iter().map(|p| p.score).collect();
        json(&EvaluateReport {
            times: grid,
            model: scores(&model),
            kaplan_meier: scores(&km_scores),
            integrated_model: integrated_brier(&model),
            integrated_kaplan_meier: integrated_brier(&km_scores),
        })
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo::default()
    }

    pub fn simulate(&mut self, n: usize, seed: u32) -> Result<String, JsValue> {
        self.run_simulate(n, seed as u64).map_err(|e| JsValue::from_str(&e))
    }

    pub fn fit(&mut self, variant: &str, iterations: usize, warmup: usize, seed: u32) -> Result<String, JsValue> {
        self.run_fit(variant, iterations, warmup, seed as u64).map_err(|e| JsValue::from_str(&e))
    }

    pub fn evaluate(&self, points: usize) -> Result<String, JsValue> {
        self.run_evaluate(points).map_err(|e| JsValue::from_str(&e))
    }
}
