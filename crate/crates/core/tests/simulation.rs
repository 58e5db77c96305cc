mod common;

use common::{ks_statistic, ks_two_sample};
use gptcm::model::Variant;
use gptcm::samplers::{stream_rng, Block};
use gptcm::simulation::*;
use nalgebra::DMatrix;

#[test]
fn covariance_matches_the_design() {
    let s = build_covariance(10, 3, 0.1, &[0.13, 0.14, 0.15], 6).unwrap();
    assert_eq!(s.nrows(), 30);
    assert_eq!(s[(0, 10)], 0.1);
    assert_eq!(s[(0, 1)], 0.13);
    assert!((s[(10, 12)] - 0.14f64.powi(2)).abs() < 1e-15);
    assert_eq!(s[(6, 7)], 0.0);
    assert_eq!(s[(0, 11)], 0.0);
    assert_eq!(s[(5, 6)], 0.0);
    assert_eq!(s, s.transpose());
}

#[test]
fn precision_graph_structure() {
    let cfg = SimConfig::low_dim();
    let g = cfg.graph(-2.0, 0.5).unwrap();
    assert_eq!(g.weight(0, 10), 0.5);
    assert_eq!(g.weight(0, 20), 0.5);
    assert_eq!(g.weight(6, 8), 0.0);
    assert_eq!(g.weight(0, 1), 1.0);
    // covariates past the band are linked only to their own copies
    for j in 6..10 {
        for n in g.neighbors(j) {
            assert_eq!(n.0 % 10, j);
        }
    }

    let identity = DMatrix::identity(12, 12);
    let g = build_mrf_graph_from_precision(&identity, 4, 3, -2.0, 0.5).unwrap();
    assert_eq!(g.edge_count(), 12);
    assert!(g.edges().iter().all(|&(_, _, w)| w == 0.5));
}

#[test]
fn generated_datasets_are_valid_and_reproducible() {
    let cfg = SimConfig::low_dim().with_seed(11);
    let (a, ta) = simulate_gptcm(&cfg).unwrap();
    let (b, tb) = simulate_gptcm(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    a.validate().unwrap();
    assert_eq!(a.n(), 200);
    assert_eq!(a.p_per_type(), vec![10; 3]);
    let (v, tv) = simulate_gptcm_replicate(&cfg, 1).unwrap();
    v.validate().unwrap();
    assert_ne!(v.time, a.time);
    assert_eq!(tv.state, ta.state);
    for i in 0..a.n() {
        if ta.cured[i] {
            assert!(!a.event[i]);
            assert_eq!(a.time[i], ta.censoring_time[i]);
            assert!(ta.latent_time[i].is_none());
        }
    }
    let hd = simulate_gptcm(&SimConfig::high_dim().with_n(50)).unwrap().0;
    hd.validate().unwrap();
}

#[test]
fn censoring_and_cure_fractions() {
    let cfg = SimConfig::low_dim().with_n(10_000).with_seed(5);
    let (data, truth) = simulate_gptcm(&cfg).unwrap();
    let censored = data.event.iter().filter(|&&e| !e).count() as f64 / data.n() as f64;
    println!("censoring fraction {censored:.4}");
    assert!((censored - 0.2).abs() <= 0.03, "censoring fraction {censored}");
    let expected: f64 = truth.theta.iter().map(|t| (-t).exp()).sum::<f64>() / data.n() as f64;
    assert!((truth.cured_fraction() - expected).abs() < 0.02);
    assert!((truth.censoring_fraction() - censored).abs() < 1e-12);
}

#[test]
fn symmetric_design_gives_exchangeable_proportions() {
    let mut cfg = SimConfig::low_dim().with_n(20_000).with_seed(2);
    for z in &mut cfg.zeta {
        z.fill(0.0);
    }
    cfg.zeta0 = vec![0.3; 3];
    let (data, _) = simulate_gptcm(&cfg).unwrap();
    for l in 0..3 {
        let m = data.proportions.column(l).mean();
        assert!((m - 1.0 / 3.0).abs() < 0.01, "type {l}: {m}");
    }
}

#[test]
fn noncured_draws_follow_the_conditional_survival() {
    let (theta, props, lambdas, kappa) = (1.7, [0.2, 0.5, 0.3], [0.6, 1.3, 2.5], 1.6);
    let mut rng = stream_rng(1, 0, Block::Simulation);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| sample_noncured_time(theta, &props, &lambdas, kappa, &mut rng).unwrap())
        .collect();
    let ks = ks_statistic(&draws, |t| 1.0 - noncured_survival(t, theta, &props, &lambdas, kappa));
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn single_type_reduces_to_scalar_inversion() {
    let (theta, lambda, kappa): (f64, f64, f64) = (2.3, 1.4, 1.8);
    for &u in &[0.01, 0.1, 0.37, 0.5, 0.9, 0.999] {
        // invert (e^{θS} - 1)/(e^θ - 1) = u in closed form
        let s = (1.0 + u * theta.exp_m1()).ln() / theta;
        let exact = lambda * (-s.ln()).powf(1.0 / kappa);
        let t = noncured_quantile(u, theta, &[1.0], &[lambda], kappa).unwrap();
        assert!((t - exact).abs() < 1e-6 * exact.max(1.0), "u={u}: {t} vs {exact}");
    }
}

#[test]
fn larger_theta_shortens_times() {
    let props = [0.5, 0.5];
    let lambdas = [1.0, 2.0];
    let median = |theta: f64| {
        let mut rng = stream_rng(9, 0, Block::Simulation);
        let mut d: Vec<f64> = (0..100_000)
            .map(|_| sample_noncured_time(theta, &props, &lambdas, 2.0, &mut rng).unwrap())
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d[d.len() / 2]
    };
    assert!(median(4.0) < median(1.0));
}

#[test]
fn metropolis_time_sampler_agrees_with_inversion() {
    let (theta, props, lambdas, kappa) = (2.0, [0.3, 0.7], [0.8, 1.5], 2.0);
    let mut rng = stream_rng(4, 0, Block::Simulation);
    let exact: Vec<f64> = (0..5000)
        .map(|_| sample_noncured_time(theta, &props, &lambdas, kappa, &mut rng).unwrap())
        .collect();
    let mh: Vec<f64> = (0..5000)
        .map(|_| sample_noncured_time_mh(theta, &props, &lambdas, kappa, 300, &mut rng).unwrap())
        .collect();
    let ks = ks_two_sample(&exact, &mh);
    assert!(ks < 0.04, "two-sample KS {ks}");
}

#[test]
fn runaway_times_are_reported() {
    let err = noncured_quantile(0.01, 1.0, &[0.5, 0.5], &[1e6, 2e6], 0.3).unwrap_err();
    assert_eq!(err.code(), "E_SAMPLER");
    assert!(noncured_quantile(0.5, -1.0, &[1.0], &[1.0], 1.0).is_err());
}

#[test]
fn cox_design_censoring_and_proportions() {
    let cfg = SimConfig::cox_misspec().with_n(10_000).with_seed(3);
    let (data, truth) = simulate_cox_misspec(&cfg).unwrap();
    data.validate().unwrap();
    let censored = data.event.iter().filter(|&&e| !e).count() as f64 / data.n() as f64;
    assert!((censored - 0.2).abs() <= 0.03, "censoring fraction {censored}");
    assert!(data.proportions.iter().all(|&p| p == 1.0 / 3.0));
    assert_eq!(data.clinical, data.cell_covariates[0]);
    assert!(truth.cured.iter().all(|&c| !c));
    let g = cfg.graph(-2.0, 1.0).unwrap();
    assert_eq!(g.edge_count(), 15);
}

#[test]
fn cox_with_zero_effects_is_weibull() {
    let mut cfg = SimConfig::cox_misspec().with_n(100_000).with_seed(8);
    cfg.cox.effects = vec![0.0; 5];
    cfg.xi = vec![0.0; 5];
    let (_, truth) = simulate_cox_misspec(&cfg).unwrap();
    let times: Vec<f64> = truth.latent_time.iter().map(|t| t.unwrap()).collect();
    let ks = ks_statistic(&times, |t| 1.0 - (-0.5 * t * t).exp());
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn resimulation_keeps_covariates() {
    let cfg = SimConfig::low_dim().with_n(60);
    let (data, truth) = simulate_gptcm(&cfg).unwrap();
    let mut rng = stream_rng(1, 0, Block::Other);
    let fresh = resimulate_outcomes(&truth.state, &data, Variant::Mrf2, &cfg.censoring, &mut rng).unwrap();
    assert_eq!(fresh.clinical, data.clinical);
    assert_eq!(fresh.cell_covariates, data.cell_covariates);
    assert_ne!(fresh.proportions, data.proportions);
    assert_ne!(fresh.time, data.time);
    let fixed = resimulate_outcomes(&truth.state, &data, Variant::Mrf1, &cfg.censoring, &mut rng).unwrap();
    assert_eq!(fixed.proportions, data.proportions);
}

#[test]
fn bad_configs_are_rejected() {
    let mut cfg = SimConfig::low_dim();
    cfg.rho = 1.5;
    assert_eq!(simulate_gptcm(&cfg).unwrap_err().code(), "E_CONFIG");
    let mut cfg = SimConfig::low_dim();
    cfg.beta[1].pop();
    assert!(cfg.validate().is_err());
    assert!(simulate_cox_misspec(&SimConfig::low_dim()).is_err());
    assert!(SimConfig::preset("medium").is_err());
    assert_eq!(SimConfig::preset("high-dim").unwrap().p, 200);
}
