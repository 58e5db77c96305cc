//! Incremental likelihood cache.
//!
//! Holds the linear predictors and every per-subject quantity the
//! likelihood needs, so that a single-coordinate proposal costs O(nL)
//! instead of a full recomputation. Candidate evaluations never mutate the
//! cache; `apply_*` methods commit an accepted move.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::model::density::{ln_mean_to_scale, MIXTURE_FLOOR};
use crate::model::likelihood::EXP_CLAMP;
use crate::model::types::{ModelSpec, ParameterState, SurvivalDataset};

#[inline]
fn clamp(x: f64) -> f64 {
    x.clamp(-EXP_CLAMP, EXP_CLAMP)
}

#[inline]
fn is_clamped(x: f64) -> bool {
    !(-EXP_CLAMP..=EXP_CLAMP).contains(&x)
}

#[inline]
fn lse(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Survival-part log-likelihood of one subject.
#[inline]
fn subject_survival_ll(event: bool, theta: f64, ln_theta: f64, mass: f64, ln_mix: f64, ln_kappa_over_t: f64) -> f64 {
    let base = -theta * mass;
    if event {
        base + ln_theta + ln_kappa_over_t + ln_mix.max(MIXTURE_FLOOR.ln())
    } else {
        base
    }
}

/// Cached likelihood quantities for one (state, data, variant).
#[derive(Debug, Clone)]
pub struct ModelCache {
    n: usize,
    big_l: usize,
    measurement_error: bool,
    use_likelihood: bool,
    kappa: f64,
    ln_gamma_offset: f64,
    event: Vec<bool>,
    ln_t: Vec<f64>,
    /// ln p̃, row-major n × L.
    ln_ptilde: Vec<f64>,
    lin_theta: Vec<f64>,
    lin_mu: Vec<f64>,
    lin_alpha: Vec<f64>,
    theta: Vec<f64>,
    /// 1 − S_l(t_i)
    one_minus_s: Vec<f64>,
    /// κ ln(t/λ) − (t/λ)^κ
    comp: Vec<f64>,
    ln_p: Vec<f64>,
    alpha: Vec<f64>,
    ln_gamma_alpha: Vec<f64>,
    alpha_sum: Vec<f64>,
    /// Σ_l ln Γ(α_il)
    sum_ln_gamma_alpha: Vec<f64>,
    /// Σ_l (α_il − 1) ln p̃_il
    alpha_dot_ln_ptilde: Vec<f64>,
    mass: Vec<f64>,
    ln_mix: Vec<f64>,
    surv_ll: Vec<f64>,
    dir_ll: Vec<f64>,
    clamp_events: usize,
}

impl ModelCache {
    pub fn new(state: &ParameterState, data: &SurvivalDataset, spec: &ModelSpec, use_likelihood: bool) -> Self {
        let n = data.n();
        let big_l = data.n_types();
        let me = spec.variant.has_measurement_error();
        let mut lin_theta = vec![state.xi0; n];
        for (k, &c) in state.xi.iter().enumerate() {
            if c != 0.0 {
                let col = data.clinical.column(k);
                for i in 0..n {
                    lin_theta[i] += col[i] * c;
                }
            }
        }
        let mut lin_mu = vec![0.0; n * big_l];
        let mut lin_alpha = vec![0.0; n * big_l];
        for l in 0..big_l {
            let x = &data.cell_covariates[l];
            for i in 0..n {
                lin_mu[i * big_l + l] = state.beta0[l];
                lin_alpha[i * big_l + l] = state.zeta0[l];
            }
            for j in 0..x.ncols() {
                let b = state.beta[l][j];
                let z = state.zeta[l][j];
                let col = x.column(j);
                for i in 0..n {
                    lin_mu[i * big_l + l] += col[i] * b;
                    if me {
                        lin_alpha[i * big_l + l] += col[i] * z;
                    }
                }
            }
        }
        let mut ln_ptilde = vec![0.0; n * big_l];
        for i in 0..n {
            for l in 0..big_l {
                ln_ptilde[i * big_l + l] = data.proportions[(i, l)].ln();
            }
        }
        let mut cache = Self {
            n,
            big_l,
            measurement_error: me,
            use_likelihood,
            kappa: state.kappa,
            ln_gamma_offset: ln_mean_to_scale(state.kappa),
            event: data.event.clone(),
            ln_t: data.time.iter().map(|t| t.ln()).collect(),
            ln_ptilde,
            lin_theta,
            lin_mu,
            lin_alpha,
            theta: vec![0.0; n],
            one_minus_s: vec![0.0; n * big_l],
            comp: vec![0.0; n * big_l],
            ln_p: vec![0.0; n * big_l],
            alpha: vec![1.0; n * big_l],
            ln_gamma_alpha: vec![0.0; n * big_l],
            alpha_sum: vec![0.0; n],
            sum_ln_gamma_alpha: vec![0.0; n],
            alpha_dot_ln_ptilde: vec![0.0; n],
            mass: vec![0.0; n],
            ln_mix: vec![0.0; n],
            surv_ll: vec![0.0; n],
            dir_ll: vec![0.0; n],
            clamp_events: 0,
        };
        for i in 0..n {
            cache.refresh_theta(i);
            cache.refresh_alpha(i);
            for l in 0..big_l {
                cache.refresh_component(i, l);
            }
            cache.refresh_subject(i);
        }
        cache
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn uses_likelihood(&self) -> bool {
        self.use_likelihood
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    /// Total log-likelihood (survival plus Dirichlet part).
    pub fn total_loglik(&self) -> f64 {
        self.surv_ll.iter().sum::<f64>() + self.dir_ll.iter().sum::<f64>()
    }

    /// Survival part of the log-likelihood as seen by the candidate
    /// evaluators (zero when the likelihood is disabled).
    pub fn survival_loglik(&self) -> f64 {
        if self.use_likelihood {
            self.surv_ll.iter().sum()
        } else {
            0.0
        }
    }

    /// Survival plus Dirichlet parts as seen by `loglik_alpha_shift`.
    pub fn survival_and_dirichlet_loglik(&self) -> f64 {
        if self.use_likelihood && self.measurement_error {
            self.total_loglik()
        } else {
            0.0
        }
    }

    /// Per-subject log-likelihood.
    pub fn pointwise(&self) -> Vec<f64> {
        self.surv_ll.iter().zip(&self.dir_ll).map(|(a, b)| a + b).collect()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Current proportions p_il.
    pub fn props(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.big_l, |i, l| self.ln_p[i * self.big_l + l].exp())
    }

    #[inline]
    fn ln_kappa_over_t(&self, i: usize) -> f64 {
        self.kappa.ln() - self.ln_t[i]
    }

    fn refresh_theta(&mut self, i: usize) {
        let lin = self.lin_theta[i];
        if is_clamped(lin) {
            self.clamp_events += 1;
        }
        self.theta[i] = clamp(lin).exp();
    }

    fn refresh_alpha(&mut self, i: usize) {
        let l0 = i * self.big_l;
        if self.measurement_error {
            let mut sum = 0.0;
            let mut slg = 0.0;
            let mut dot = 0.0;
            for l in 0..self.big_l {
                let lin = self.lin_alpha[l0 + l];
                if is_clamped(lin) {
                    self.clamp_events += 1;
                }
                let a = clamp(lin).exp();
                self.alpha[l0 + l] = a;
                let lg = ln_gamma(a);
                self.ln_gamma_alpha[l0 + l] = lg;
                sum += a;
                slg += lg;
                dot += (a - 1.0) * self.ln_ptilde[l0 + l];
            }
            let ln_sum = sum.ln();
            for l in 0..self.big_l {
                self.ln_p[l0 + l] = self.alpha[l0 + l].ln() - ln_sum;
            }
            self.alpha_sum[i] = sum;
            self.sum_ln_gamma_alpha[i] = slg;
            self.alpha_dot_ln_ptilde[i] = dot;
            self.dir_ll[i] = ln_gamma(sum) - slg + dot;
        } else {
            for l in 0..self.big_l {
                self.ln_p[l0 + l] = self.ln_ptilde[l0 + l];
            }
            self.dir_ll[i] = 0.0;
        }
    }

    fn refresh_component(&mut self, i: usize, l: usize) {
        let k = i * self.big_l + l;
        let lin = self.lin_mu[k];
        if is_clamped(lin) {
            self.clamp_events += 1;
        }
        let lz = self.kappa * (self.ln_t[i] - (clamp(lin) - self.ln_gamma_offset));
        let z = lz.exp();
        self.one_minus_s[k] = -(-z).exp_m1();
        self.comp[k] = lz - z;
    }

    fn refresh_subject(&mut self, i: usize) {
        let l0 = i * self.big_l;
        let mut mass = 0.0;
        let mut terms = [0.0f64; 32];
        let mut heap;
        let buf: &mut [f64] = if self.big_l <= 32 {
            &mut terms[..self.big_l]
        } else {
            heap = vec![0.0; self.big_l];
            &mut heap
        };
        for l in 0..self.big_l {
            let lp = self.ln_p[l0 + l];
            mass += lp.exp() * self.one_minus_s[l0 + l];
            buf[l] = lp + self.comp[l0 + l];
        }
        self.mass[i] = mass;
        self.ln_mix[i] = lse(buf);
        let th = self.theta[i];
        self.surv_ll[i] = subject_survival_ll(
            self.event[i],
            th,
            clamp(self.lin_theta[i]),
            mass,
            self.ln_mix[i],
            self.ln_kappa_over_t(i),
        );
    }

    /// Log-likelihood (changing part only) after shifting the cure-rate
    /// linear predictor by `x_i · delta` (`x = None` means the intercept).
    pub fn loglik_theta_shift(&self, x: Option<&[f64]>, delta: f64) -> f64 {
        if !self.use_likelihood {
            return 0.0;
        }
        let lk = self.kappa.ln();
        let mut total = 0.0;
        for i in 0..self.n {
            let d = x.map_or(delta, |x| x[i] * delta);
            let ln_th = clamp(self.lin_theta[i] + d);
            let th = ln_th.exp();
            total += subject_survival_ll(self.event[i], th, ln_th, self.mass[i], self.ln_mix[i], lk - self.ln_t[i]);
        }
        total
    }

    pub fn apply_theta_shift(&mut self, x: Option<&[f64]>, delta: f64) {
        for i in 0..self.n {
            self.lin_theta[i] += x.map_or(delta, |x| x[i] * delta);
            self.refresh_theta(i);
            // only θ changed; mass and mixture are unchanged
            self.surv_ll[i] = subject_survival_ll(
                self.event[i],
                self.theta[i],
                clamp(self.lin_theta[i]),
                self.mass[i],
                self.ln_mix[i],
                self.ln_kappa_over_t(i),
            );
        }
    }

    /// Log-likelihood (survival part) after shifting ln μ_·l by `x_i · delta`.
    pub fn loglik_mu_shift(&self, l: usize, x: Option<&[f64]>, delta: f64) -> f64 {
        if !self.use_likelihood {
            return 0.0;
        }
        let bl = self.big_l;
        let lk = self.kappa.ln();
        let mut total = 0.0;
        for i in 0..self.n {
            let d = x.map_or(delta, |x| x[i] * delta);
            let k = i * bl + l;
            let lin = clamp(self.lin_mu[k] + d);
            let lz = self.kappa * (self.ln_t[i] - (lin - self.ln_gamma_offset));
            let z = lz.exp();
            let oms = -(-z).exp_m1();
            let p = self.ln_p[k].exp();
            let mass = self.mass[i] + p * (oms - self.one_minus_s[k]);
            let ln_mix = if self.event[i] {
                let row = &self.ln_p[i * bl..(i + 1) * bl];
                let comp = &self.comp[i * bl..(i + 1) * bl];
                let mut max = self.ln_p[k] + lz - z;
                for m in 0..bl {
                    if m != l {
                        max = max.max(row[m] + comp[m]);
                    }
                }
                if max == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    let mut s = (self.ln_p[k] + lz - z - max).exp();
                    for m in 0..bl {
                        if m != l {
                            s += (row[m] + comp[m] - max).exp();
                        }
                    }
                    max + s.ln()
                }
            } else {
                0.0
            };
            let ln_th = clamp(self.lin_theta[i]);
            total += subject_survival_ll(self.event[i], self.theta[i], ln_th, mass, ln_mix, lk - self.ln_t[i]);
        }
        total
    }

    pub fn apply_mu_shift(&mut self, l: usize, x: Option<&[f64]>, delta: f64) {
        for i in 0..self.n {
            self.lin_mu[i * self.big_l + l] += x.map_or(delta, |x| x[i] * delta);
            self.refresh_component(i, l);
            self.refresh_subject(i);
        }
    }

    /// Log-likelihood (survival + Dirichlet parts) after shifting ln α_·l.
    pub fn loglik_alpha_shift(&self, l: usize, x: Option<&[f64]>, delta: f64) -> f64 {
        if !self.use_likelihood || !self.measurement_error {
            return 0.0;
        }
        let bl = self.big_l;
        let lk = self.kappa.ln();
        let mut total = 0.0;
        let mut buf = [0.0f64; 32];
        let mut heap = Vec::new();
        for i in 0..self.n {
            let d = x.map_or(delta, |x| x[i] * delta);
            let k = i * bl + l;
            let a_new = clamp(self.lin_alpha[k] + d).exp();
            let a_old = self.alpha[k];
            let sum = self.alpha_sum[i] - a_old + a_new;
            let ln_sum = sum.ln();
            let lg_new = ln_gamma(a_new);
            let dir = ln_gamma(sum) - (self.sum_ln_gamma_alpha[i] - self.ln_gamma_alpha[k] + lg_new)
                + self.alpha_dot_ln_ptilde[i]
                + (a_new - a_old) * self.ln_ptilde[k];
            let terms: &mut [f64] = if bl <= 32 {
                &mut buf[..bl]
            } else {
                heap.resize(bl, 0.0);
                &mut heap
            };
            let mut mass = 0.0;
            for m in 0..bl {
                let a = if m == l { a_new } else { self.alpha[i * bl + m] };
                let lp = a.ln() - ln_sum;
                mass += (a / sum) * self.one_minus_s[i * bl + m];
                terms[m] = lp + self.comp[i * bl + m];
            }
            let ln_mix = if self.event[i] { lse(terms) } else { 0.0 };
            let ln_th = clamp(self.lin_theta[i]);
            total += subject_survival_ll(self.event[i], self.theta[i], ln_th, mass, ln_mix, lk - self.ln_t[i]) + dir;
        }
        total
    }

    pub fn apply_alpha_shift(&mut self, l: usize, x: Option<&[f64]>, delta: f64) {
        if !self.measurement_error {
            return;
        }
        for i in 0..self.n {
            self.lin_alpha[i * self.big_l + l] += x.map_or(delta, |x| x[i] * delta);
            self.refresh_alpha(i);
            self.refresh_subject(i);
        }
    }

    /// Log-likelihood (survival part) at a different Weibull shape.
    pub fn loglik_kappa(&self, kappa: f64) -> f64 {
        if !self.use_likelihood {
            return 0.0;
        }
        if !(kappa > 0.0) {
            return f64::NEG_INFINITY;
        }
        let bl = self.big_l;
        let lg = ln_mean_to_scale(kappa);
        let lk = kappa.ln();
        let mut total = 0.0;
        let mut buf = [0.0f64; 32];
        let mut heap = Vec::new();
        for i in 0..self.n {
            let terms: &mut [f64] = if bl <= 32 {
                &mut buf[..bl]
            } else {
                heap.resize(bl, 0.0);
                &mut heap
            };
            let mut mass = 0.0;
            for l in 0..bl {
                let k = i * bl + l;
                let lz = kappa * (self.ln_t[i] - (clamp(self.lin_mu[k]) - lg));
                let z = lz.exp();
                let lp = self.ln_p[k];
                mass += lp.exp() * -(-z).exp_m1();
                terms[l] = lp + lz - z;
            }
            let ln_mix = if self.event[i] { lse(terms) } else { 0.0 };
            total += subject_survival_ll(self.event[i], self.theta[i], clamp(self.lin_theta[i]), mass, ln_mix, lk - self.ln_t[i]);
        }
        total
    }

    pub fn set_kappa(&mut self, kappa: f64) {
        self.kappa = kappa;
        self.ln_gamma_offset = ln_mean_to_scale(kappa);
        for i in 0..self.n {
            for l in 0..self.big_l {
                self.refresh_component(i, l);
            }
            self.refresh_subject(i);
        }
    }

    /// Maximum absolute difference against a freshly built cache; used by
    /// debug-mode consistency checks.
    pub fn max_discrepancy(&self, fresh: &ModelCache) -> f64 {
        self.surv_ll
            .iter()
            .zip(&fresh.surv_ll)
            .chain(self.dir_ll.iter().zip(&fresh.dir_ll))
            .map(|(a, b)| {
                if a == b {
                    0.0
                } else {
                    (a - b).abs() / (1.0 + b.abs())
                }
            })
            .fold(0.0, f64::max)
    }
}
