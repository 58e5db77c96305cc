//! Scalar densities and survival functions of the cure model.

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{domain, Result};
use crate::model::types::SIMPLEX_TOL;

/// Floor applied to the mixture density before taking logs.
pub const MIXTURE_FLOOR: f64 = 1e-300;

/// `ln Σ exp(xᵢ)`; `-∞` for an empty slice or all-`-∞` inputs.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln(eˣ − 1)` for `x > 0`, accurate for large and small `x`.
pub fn ln_expm1(x: f64) -> f64 {
    if x > 40.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

fn require_simplex(props: &[f64]) -> Result<()> {
    let sum: f64 = props.iter().sum();
    if props.iter().any(|&p| !(p >= 0.0 && p <= 1.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return domain(format!("proportions {props:?} are not on the simplex (sum {sum})"));
    }
    Ok(())
}

/// Weibull survival `exp(−(t/λ)^κ)`.
pub fn weibull_survival(t: f64, lambda: f64, kappa: f64) -> Result<f64> {
    require_positive("t", t)?;
    require_positive("lambda", lambda)?;
    require_positive("kappa", kappa)?;
    Ok((-(t / lambda).powf(kappa)).exp())
}

/// Weibull scale whose mean equals `mu`: `λ = μ / Γ(1 + 1/κ)`.
pub fn weibull_scale_from_mean(mu: f64, kappa: f64) -> Result<f64> {
    require_positive("mu", mu)?;
    require_positive("kappa", kappa)?;
    Ok(mu / gamma(1.0 + 1.0 / kappa))
}

/// `ln Γ(1 + 1/κ)`, the log offset between Weibull mean and scale.
pub fn ln_mean_to_scale(kappa: f64) -> f64 {
    ln_gamma(1.0 + 1.0 / kappa)
}

/// Population survival `exp(−θ(1 − Σ p_l S_l))`.
pub fn population_survival(theta: f64, props: &[f64], surv: &[f64]) -> Result<f64> {
    require_positive("theta", theta)?;
    require_simplex(props)?;
    if props.len() != surv.len() {
        return Err(crate::error::GptcmError::Dimension(format!(
            "{} proportions but {} survival values",
            props.len(),
            surv.len()
        )));
    }
    if surv.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
        return domain(format!("survival values {surv:?} outside [0,1]"));
    }
    let mass: f64 = props.iter().zip(surv).map(|(p, s)| p * (1.0 - s)).sum();
    Ok((-theta * mass).exp())
}

/// Per-component pieces of the population model at one time point.
struct Components {
    /// Σ p_l (1 − S_l)
    noncured_mass: f64,
    /// ln Σ p_l (t/λ_l)^κ e^{−(t/λ_l)^κ}
    ln_mixture: f64,
}

fn components(t: f64, props: &[f64], lambdas: &[f64], kappa: f64) -> Components {
    let lt = t.ln();
    let mut mass = 0.0;
    let mut terms = [f64::NEG_INFINITY; 16];
    let mut heap = Vec::new();
    let slot: &mut [f64] = if props.len() <= terms.len() {
        &mut terms[..props.len()]
    } else {
        heap.resize(props.len(), f64::NEG_INFINITY);
        &mut heap
    };
    for (l, (&p, &lam)) in props.iter().zip(lambdas).enumerate() {
        let lz = kappa * (lt - lam.ln());
        let z = lz.exp();
        mass += p * -(-z).exp_m1();
        slot[l] = p.ln() + lz - z;
    }
    Components {
        noncured_mass: mass,
        ln_mixture: log_sum_exp(slot).max(MIXTURE_FLOOR.ln()),
    }
}

/// `ln f_pop(t)` with `f_pop = −dS_pop/dt
///  = S_pop · θ κ t^{κ−1} Σ p_l λ_l^{−κ} e^{−(t/λ_l)^κ}`.
pub fn population_log_density(t: f64, theta: f64, props: &[f64], lambdas: &[f64], kappa: f64) -> Result<f64> {
    require_positive("t", t)?;
    require_positive("theta", theta)?;
    require_positive("kappa", kappa)?;
    require_simplex(props)?;
    if props.len() != lambdas.len() {
        return Err(crate::error::GptcmError::Dimension(format!(
            "{} proportions but {} scales",
            props.len(),
            lambdas.len()
        )));
    }
    for &lam in lambdas {
        require_positive("lambda", lam)?;
    }
    let c = components(t, props, lambdas, kappa);
    Ok(-theta * c.noncured_mass + theta.ln() + kappa.ln() - t.ln() + c.ln_mixture)
}

/// `ln S_pop(t)` from Weibull scales.
pub fn population_log_survival(t: f64, theta: f64, props: &[f64], lambdas: &[f64], kappa: f64) -> Result<f64> {
    require_positive("t", t)?;
    require_positive("theta", theta)?;
    require_positive("kappa", kappa)?;
    require_simplex(props)?;
    Ok(-theta * components(t, props, lambdas, kappa).noncured_mass)
}

/// Dirichlet log density `−ln B(α) + Σ (α_l − 1) ln p̃_l`.
pub fn dirichlet_log_density(ptilde: &[f64], alpha: &[f64]) -> Result<f64> {
    if ptilde.len() != alpha.len() {
        return Err(crate::error::GptcmError::Dimension(format!(
            "{} proportions but {} concentrations",
            ptilde.len(),
            alpha.len()
        )));
    }
    if ptilde.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return domain(format!("composition {ptilde:?} is not strictly interior"));
    }
    require_simplex(ptilde)?;
    for &a in alpha {
        require_positive("alpha", a)?;
    }
    let total: f64 = alpha.iter().sum();
    let mut ld = ln_gamma(total);
    for (&p, &a) in ptilde.iter().zip(alpha) {
        ld += (a - 1.0) * p.ln() - ln_gamma(a);
    }
    Ok(ld)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn weibull_survival_values() {
        for kappa in [0.3, 1.0, 2.0, 7.5] {
            close(weibull_survival(1.7, 1.7, kappa).unwrap(), (-1.0f64).exp(), 1e-15);
        }
        close(weibull_survival(1e-12, 1.0, 2.0).unwrap(), 1.0, 1e-15);
        close(weibull_survival(2.0, 1.0, 2.0).unwrap(), 0.018_315_638_888_734_18, 1e-15);
        assert!(weibull_survival(0.0, 1.0, 1.0).is_err());
        assert!(weibull_survival(1.0, -1.0, 1.0).is_err());
        assert!(weibull_survival(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn weibull_survival_decreasing() {
        let mut prev = 1.0;
        for k in 1..200 {
            let s = weibull_survival(k as f64 * 0.05, 2.0, 1.5).unwrap();
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn scale_from_mean() {
        close(weibull_scale_from_mean(gamma(1.5), 2.0).unwrap(), 1.0, 1e-14);
        close(weibull_scale_from_mean(1.0, 1.0).unwrap(), 1.0, 1e-14);
        // 2 / Γ(1.5) = 4 / √π
        close(weibull_scale_from_mean(2.0, 2.0).unwrap(), 4.0 / std::f64::consts::PI.sqrt(), 1e-13);
        close(weibull_scale_from_mean(2.0, 2.0).unwrap(), 2.256_758, 1e-6);
        assert!(weibull_scale_from_mean(0.0, 2.0).is_err());
    }

    #[test]
    fn population_survival_values() {
        close(population_survival(1.0, &[1.0], &[0.5]).unwrap(), (-0.5f64).exp(), 1e-15);
        close(population_survival(3.3, &[0.2, 0.8], &[1.0, 1.0]).unwrap(), 1.0, 1e-15);
        close(population_survival(2.5, &[0.3, 0.7], &[0.0, 0.0]).unwrap(), (-2.5f64).exp(), 1e-15);
        assert!(population_survival(1.0, &[0.5, 0.4], &[0.5, 0.5]).is_err());
        assert!(population_survival(1.0, &[0.5, 0.5 + 1e-9], &[0.5, 0.5]).is_ok());
    }

    #[test]
    fn density_matches_finite_difference() {
        let (theta, props, lams, kappa) = (1.3, [0.4, 0.6], [1.0, 2.0], 2.0);
        let s = |t: f64| population_log_survival(t, theta, &props, &lams, kappa).unwrap().exp();
        let h = 1e-5;
        let fd = -(s(1.0 + h) - s(1.0 - h)) / (2.0 * h);
        let f = population_log_density(1.0, theta, &props, &lams, kappa).unwrap().exp();
        assert!((f - fd).abs() / f < 1e-6, "{f} vs {fd}");
    }

    #[test]
    fn density_degenerates_to_ptcm() {
        let (theta, lam, kappa) = (2.1, 1.4, 1.7);
        for t in [0.1, 0.8, 2.0, 5.0] {
            let big_f = 1.0 - weibull_survival(t, lam, kappa).unwrap();
            let fw = kappa / lam * (t / lam).powf(kappa - 1.0) * (1.0 - big_f);
            let expected = (theta * fw * (-theta * big_f).exp()).ln();
            close(population_log_density(t, theta, &[1.0], &[lam], kappa).unwrap(), expected, 1e-12);
        }
    }

    #[test]
    fn dirichlet_values() {
        close(dirichlet_log_density(&[0.3, 0.7], &[1.0, 1.0]).unwrap(), 0.0, 1e-14);
        close(dirichlet_log_density(&[0.5, 0.5], &[2.0, 2.0]).unwrap(), 1.5f64.ln(), 1e-14);
        assert!(dirichlet_log_density(&[0.0, 1.0], &[2.0, 2.0]).is_err());
        assert!(dirichlet_log_density(&[0.3, 0.6], &[2.0, 2.0]).is_err());
    }

    #[test]
    fn log_sum_exp_edge_cases() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        close(log_sum_exp(&[1000.0, 1000.0]), 1000.0 + 2f64.ln(), 1e-12);
        close(ln_expm1(50.0), 50.0, 1e-12);
        close(ln_expm1(1e-3), (1e-3f64).exp_m1().ln(), 1e-14);
    }
}
