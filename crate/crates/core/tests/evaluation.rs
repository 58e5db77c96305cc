use std::collections::BTreeMap;

use gptcm::evaluation::*;
use gptcm::mcmc::{run_fit, ChainOutput, RunConfig, Trace};
use gptcm::model::{linear_predictors, population_survival, weibull_survival, ModelSpec, ParameterState, Variant};
use gptcm::samplers::{stream_rng, Block};
use gptcm::simulation::{simulate_gptcm, SimConfig};
use rand::Rng;

/// A chain holding only β and γ draws for `p` coefficients of one type.
fn synthetic_chain(beta: Vec<Vec<f64>>, gamma: Vec<Vec<bool>>) -> ChainOutput {
    let p = beta[0].len();
    let label = |b: &str| (1..=p).map(|j| format!("{b}[{j},1]")).collect::<Vec<_>>();
    let mut tb = Trace::new("beta", label("beta"));
    let mut tg = Trace::new("gamma", label("gamma"));
    let mut tk = Trace::new("kappa", vec!["kappa".into()]);
    for (b, g) in beta.iter().zip(&gamma) {
        tb.push(b);
        tg.push(&g.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect::<Vec<_>>());
        tk.push(&[2.0]);
    }
    ChainOutput {
        chain_id: 0,
        variant: Variant::Ber1,
        d: 0,
        p: vec![p],
        iterations: (1..=beta.len()).collect(),
        traces: vec![tk, tb, tg],
        pointwise: None,
        warmup_head: Vec::new(),
        diagnostics: BTreeMap::new(),
        incidents: Vec::new(),
        clamp_events: 0,
        step_log: Vec::new(),
        final_state: ParameterState::zeros(0, &[p]),
        elapsed_secs: 0.0,
    }
}

#[test]
fn identical_draws_give_degenerate_intervals() {
    let chain = synthetic_chain(vec![vec![0.7, 0.0]; 200], vec![vec![true, false]; 200]);
    let s = summarize_chains(&[chain], 0.5).unwrap();
    let b = s.parameter("beta[1,1]").unwrap();
    assert_eq!((b.mean, b.sd, b.lower, b.upper), (0.7, 0.0, 0.7, 0.7));
    assert_eq!(s.gamma_mask(), Some(vec![true, false]));
    assert!((s.indicator("gamma[1,1]").unwrap().conditional_mean - 0.7).abs() < 1e-14);
}

#[test]
fn partial_inclusion_is_excluded_from_the_median_model() {
    let n = 20_000;
    let gamma: Vec<Vec<bool>> = (0..n).map(|i| vec![i < 7_500]).collect();
    let beta: Vec<Vec<f64>> = gamma.iter().map(|g| vec![if g[0] { 1.2 } else { 0.0 }]).collect();
    let s = summarize_chains(&[synthetic_chain(beta, gamma)], 0.5).unwrap();
    let ind = s.indicator("gamma[1,1]").unwrap();
    assert_eq!(ind.mpip, 0.375);
    assert!(!ind.selected);
    assert_eq!(s.mpm_state().beta[0][0], 0.0);
    assert!((s.posterior_mean_state().beta[0][0] - 0.45).abs() < 1e-12);
}

#[test]
fn enumerated_draws_reproduce_exact_inclusion_probabilities() {
    // 3 indicators; configuration m appears (m + 1) times
    let mut gamma = Vec::new();
    for m in 0u32..8 {
        for _ in 0..=m {
            gamma.push((0..3).map(|k| m >> k & 1 == 1).collect::<Vec<bool>>());
        }
    }
    let gamma: Vec<Vec<bool>> = gamma.iter().cycle().take(36 * 10).cloned().collect();
    let beta: Vec<Vec<f64>> = gamma.iter().map(|g| g.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect()).collect();
    let s = summarize_chains(&[synthetic_chain(beta, gamma)], 0.5).unwrap();
    for k in 0..3 {
        let exact: u32 = (0u32..8).filter(|m| m >> k & 1 == 1).map(|m| m + 1).sum();
        let mpip = s.indicator(&format!("gamma[{},1]", k + 1)).unwrap().mpip;
        assert!((mpip - exact as f64 / 36.0).abs() < 1e-12, "indicator {k}");
    }
}

#[test]
fn raising_the_threshold_never_adds_variables() {
    let mut rng = stream_rng(3, 0, Block::Other);
    let probs = [0.1, 0.45, 0.5, 0.55, 0.9, 0.3];
    let gamma: Vec<Vec<bool>> = (0..1000)
        .map(|_| probs.iter().map(|&p| rng.random::<f64>() < p).collect())
        .collect();
    let beta: Vec<Vec<f64>> = gamma.iter().map(|g| g.iter().map(|&x| x as u8 as f64).collect()).collect();
    let chain = synthetic_chain(beta, gamma);
    let mut prev: Option<Vec<bool>> = None;
    for t in [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0] {
        let mask = summarize_chains(std::slice::from_ref(&chain), t).unwrap().gamma_mask().unwrap();
        if let Some(p) = &prev {
            assert!(mask.iter().zip(p).all(|(&now, &before)| !now || before));
        }
        prev = Some(mask);
    }
}

#[test]
fn empty_or_short_chains_are_rejected() {
    assert!(summarize_chains(&[], 0.5).is_err());
    let short = synthetic_chain(vec![vec![0.0]; 10], vec![vec![true]; 10]);
    assert_eq!(summarize_chains(&[short], 0.5).unwrap_err().code(), "E_CONTRACT");
}

#[test]
fn selection_rates() {
    let truth = [true, false, true, false];
    let m = selection_metrics(&truth, &truth).unwrap();
    assert_eq!((m.accuracy, m.sensitivity, m.specificity), (1.0, Some(1.0), Some(1.0)));

    // 600 coefficients, 13 positives
    let truth: Vec<bool> = (0..600).map(|i| i < 13).collect();
    let none = vec![false; 600];
    let m = selection_metrics(&none, &truth).unwrap();
    assert!((m.accuracy - 587.0 / 600.0).abs() < 1e-15);
    assert_eq!(m.sensitivity, Some(0.0));
    assert_eq!(m.specificity, Some(1.0));
    assert_eq!(format!("{:.3}", m.accuracy), "0.978");

    // catches 2 of 13, eight false positives
    let mask: Vec<bool> = (0..600).map(|i| i < 2 || (13..21).contains(&i)).collect();
    let m = selection_metrics(&mask, &truth).unwrap();
    let row = (
        format!("{:.3}", m.accuracy),
        format!("{:.3}", m.sensitivity.unwrap()),
        format!("{:.3}", m.specificity.unwrap()),
    );
    assert_eq!(row, ("0.968".into(), "0.154".into(), "0.986".into()));

    let m = selection_metrics(&[true, false], &[false, false]).unwrap();
    assert_eq!(m.sensitivity, None);
    assert_eq!(m.specificity, Some(0.5));
    assert!(selection_metrics(&[true], &[true, false]).is_err());
}

#[test]
fn rmse_scaling() {
    assert_eq!(scaled_rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    let r = scaled_rmse(&[0.1, -0.1, 1.1, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap();
    assert!((r - 0.1).abs() < 1e-15);
    assert_eq!(scaled_rmse(&[0.0], &[0.0, 1.0]).unwrap_err().code(), "E_DIMENSION");
}

#[test]
fn kaplan_meier_by_hand() {
    let km = kaplan_meier(&[1.0, 2.0, 3.0], &[true, true, true]).unwrap();
    assert!((km.eval(1.0) - 2.0 / 3.0).abs() < 1e-15);
    assert!((km.eval(2.5) - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(km.eval(3.0), 0.0);
    assert_eq!(km.eval(0.5), 1.0);
    assert_eq!(km.eval_left(1.0), 1.0);

    let km = kaplan_meier(&[3.0, 1.0, 2.0], &[true, true, false]).unwrap();
    assert!((km.eval(1.5) - 2.0 / 3.0).abs() < 1e-15);
    assert!((km.eval(2.5) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(km.eval(3.0), 0.0);

    let km = kaplan_meier(&[1.0, 2.0], &[false, false]).unwrap();
    assert!(km.times.is_empty());
    assert_eq!(km.eval(10.0), 1.0);
}

fn constant_curve(n: usize, times: &[f64], s: f64) -> PredictionCurve {
    PredictionCurve {
        times: times.to_vec(),
        survival: vec![vec![s; times.len()]; n],
        aggregation: Aggregation::PlugIn,
    }
}

#[test]
fn brier_score_by_hand() {
    let time = [1.0, 2.0, 3.0, 4.0];
    let grid = [0.5, 1.5, 2.5, 3.5];
    let bs = brier_score(&constant_curve(4, &grid, 0.5), &time, &[true; 4]).unwrap();
    assert!(bs.iter().all(|b| (b.score.unwrap() - 0.25).abs() < 1e-15));
    assert!((integrated_brier(&bs).unwrap() - 0.25).abs() < 1e-15);

    let bs = brier_score(&constant_curve(4, &[0.5], 1.0), &time, &[true; 4]).unwrap();
    assert_eq!(bs[0].score, Some(0.0));

    // censoring at 2: Ĝ(2) = 2/3, so survivors past 2.5 weigh 3/2
    let bs = brier_score(&constant_curve(4, &[2.5], 0.8), &time, &[true, false, true, true]).unwrap();
    let expected = (0.64 + 2.0 * 0.04 * 1.5) / 4.0;
    assert!((bs[0].score.unwrap() - expected).abs() < 1e-15);
    assert!(bs[0].reliable);

    let late = brier_score(&constant_curve(4, &[5.0], 0.5), &time, &[true; 4]).unwrap();
    assert!(!late[0].reliable);
    assert!(brier_score(&constant_curve(3, &[1.0], 0.5), &time, &[true; 4]).is_err());
}

#[test]
fn weighted_brier_is_unbiased_under_independent_censoring() {
    // T ~ Exp(1), C ~ Exp(1/2); the true curve e^{-t} has Brier S(1-S)
    let n = 40_000;
    let mut rng = stream_rng(12, 0, Block::Other);
    let mut time = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    for _ in 0..n {
        let t = -(1.0 - rng.random::<f64>()).ln();
        let c = -2.0 * (1.0 - rng.random::<f64>()).ln();
        time.push(t.min(c));
        event.push(t <= c);
    }
    let grid = [0.25, 0.5, 1.0, 1.5];
    let curve = PredictionCurve {
        times: grid.to_vec(),
        survival: vec![grid.iter().map(|t| (-t).exp()).collect(); n],
        aggregation: Aggregation::PlugIn,
    };
    for b in brier_score(&curve, &time, &event).unwrap() {
        let s = (-b.time).exp();
        assert!((b.score.unwrap() - s * (1.0 - s)).abs() < 0.01, "t = {}", b.time);
    }
}

#[test]
fn kaplan_meier_reference_equals_constant_prediction() {
    let time = [0.4, 1.3, 2.2, 2.9, 3.5, 4.1];
    let event = [true, false, true, true, false, true];
    let km = kaplan_meier(&time, &event).unwrap();
    let grid = time_grid(&time, 0.8, 7).unwrap();
    let reference = PredictionCurve::reference(&km, time.len(), &grid).unwrap();
    let rows: Vec<f64> = grid.iter().map(|&t| km.eval(t)).collect();
    let manual = PredictionCurve {
        times: grid.clone(),
        survival: vec![rows; time.len()],
        aggregation: Aggregation::PlugIn,
    };
    assert_eq!(
        brier_score(&reference, &time, &event).unwrap(),
        brier_score(&manual, &time, &event).unwrap()
    );
    assert_eq!(grid[0], 0.0);
    assert!((grid[6] - 3.5).abs() < 1e-12);
}

fn small_fit(variant: Variant) -> (gptcm::model::SurvivalDataset, gptcm::mcmc::FitResult, ParameterState) {
    let cfg = SimConfig::low_dim().with_n(40).with_seed(4);
    let (data, truth) = simulate_gptcm(&cfg).unwrap();
    let mut spec = ModelSpec::new(variant);
    if variant.selection() == gptcm::model::Selection::Mrf {
        let g = cfg.graph(spec.hyper.mrf_sparsity(), 0.2).unwrap();
        let gz = variant.has_measurement_error().then(|| g.clone());
        spec = spec.with_graphs(Some(g), gz);
    }
    let run = RunConfig {
        n_iterations: 300,
        n_warmup: 100,
        seed: 5,
        ..Default::default()
    };
    (data.clone(), run_fit(&spec, &data, &run, Some(1)).unwrap(), truth.state)
}

#[test]
fn predictions_are_monotone_and_reach_the_cure_fraction() {
    let (data, fit, truth) = small_fit(Variant::Mrf2);
    let summary = summarize(&fit).unwrap();
    let tmax = data.time.iter().copied().fold(0.0, f64::max);
    // the horizon must also dwarf the largest Weibull scale, which can
    // exceed the follow-up by far
    let dq = linear_predictors(&truth, &data, true).unwrap();
    let horizon = 100.0 * dq.lambda.iter().copied().fold(tmax, f64::max);
    let curves = survival_curves(&truth, Variant::Mrf2, &data, &[horizon]).unwrap();
    for (i, row) in curves.iter().enumerate() {
        assert!((row[0] - (-dq.theta[i]).exp()).abs() < 1e-6, "subject {i}");
    }
    // a short fit leaves κ small, so the fitted plateau is checked further out
    let grid = vec![0.0, 0.5, 1.0, 2.0, tmax, 1e4 * tmax];
    for mode in [PredictionMode::Mpm, PredictionMode::PosteriorMean, PredictionMode::Drawwise] {
        let curve = predict_survival(&fit, &summary, &data, &grid, mode).unwrap();
        curve.check().unwrap();
        assert!(curve.survival.iter().all(|r| r[0] == 1.0));
        if mode != PredictionMode::Drawwise {
            let state = if mode == PredictionMode::Mpm {
                summary.mpm_state()
            } else {
                summary.posterior_mean_state()
            };
            let dq = linear_predictors(&state, &data, true).unwrap();
            for (i, row) in curve.survival.iter().enumerate() {
                assert!((row[5] - (-dq.theta[i]).exp()).abs() < 1e-6);
            }
        }
    }
    assert_eq!(PredictionMode::default_for(Variant::NoBvs1), PredictionMode::PosteriorMean);
    assert_eq!("drawwise".parse::<PredictionMode>().unwrap(), PredictionMode::Drawwise);
}

#[test]
fn plug_in_curves_match_the_population_survival_composition() {
    let (data, _, truth) = small_fit(Variant::Ber1);
    let grid = [0.3, 1.1, 2.7];
    for variant in [Variant::Ber1, Variant::Mrf2] {
        let curves = survival_curves(&truth, variant, &data, &grid).unwrap();
        let dq = linear_predictors(&truth, &data, variant.has_measurement_error()).unwrap();
        for i in 0..data.n() {
            for (k, &t) in grid.iter().enumerate() {
                let surv: Vec<f64> = (0..3).map(|l| weibull_survival(t, dq.lambda[(i, l)], truth.kappa).unwrap()).collect();
                let props: Vec<f64> = dq.props.row(i).iter().copied().collect();
                let direct = population_survival(dq.theta[i], &props, &surv).unwrap();
                assert!((curves[i][k] - direct).abs() < 1e-12);
            }
        }
    }
    let mut cured = truth.clone();
    cured.xi0 = -60.0;
    cured.xi.fill(0.0);
    let curves = survival_curves(&cured, Variant::Mrf2, &data, &grid).unwrap();
    assert!(curves.iter().flatten().all(|&s| (s - 1.0).abs() < 1e-12));
}

#[test]
fn recovery_report_against_truth() {
    let (_, fit, truth) = small_fit(Variant::Mrf2);
    let summary = summarize(&fit).unwrap();
    let r = recovery(&summary, &truth).unwrap();
    assert!(r.beta_rmse.is_finite() && r.zeta_rmse.is_some());
    let g = r.gamma.unwrap();
    assert_eq!(g.true_positives + g.false_negatives, 13);
    let (_, fit, truth) = small_fit(Variant::NoBvs1);
    let r = recovery(&summarize(&fit).unwrap(), &truth).unwrap();
    assert!(r.gamma.is_none() && r.zeta_rmse.is_none());
}

#[test]
fn missing_covariate_blocks_are_rejected() {
    let (mut data, fit, _) = small_fit(Variant::Mrf2);
    let summary = summarize(&fit).unwrap();
    data.cell_covariates.pop();
    data.proportions = data.proportions.columns(0, 2).into_owned();
    assert!(predict_survival(&fit, &summary, &data, &[1.0], PredictionMode::Mpm).is_err());
}
