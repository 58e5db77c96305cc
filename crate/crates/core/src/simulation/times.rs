use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{GptcmError, Result};
use crate::model::density::population_log_density;

/// Largest time the bisection bracket may grow to.
pub const MAX_TIME: f64 = 1e6;

fn check_inputs(theta: f64, props: &[f64], lambdas: &[f64], kappa: f64) -> Result<()> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(GptcmError::Domain(format!("theta must be positive, got {theta}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(GptcmError::Domain(format!("kappa must be positive, got {kappa}")));
    }
    if props.len() != lambdas.len() || props.is_empty() {
        return Err(GptcmError::Dimension(format!(
            "{} proportions but {} scales",
            props.len(),
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(GptcmError::Domain("Weibull scales must be positive".into()));
    }
    if props.iter().any(|&p| !(p >= 0.0)) {
        return Err(GptcmError::Domain("proportions must be nonnegative".into()));
    }
    Ok(())
}

/// Mixture survival `Σ p_l S_l(t)`.
fn mixture_survival(t: f64, props: &[f64], lambdas: &[f64], kappa: f64) -> f64 {
    props
        .iter()
        .zip(lambdas)
        .map(|(&p, &l)| p * (-(t / l).powf(kappa)).exp())
        .sum()
}

/// Conditional survival of a noncured subject,
/// `(S_pop(t) - e^{-θ}) / (1 - e^{-θ})`.
pub fn noncured_survival(t: f64, theta: f64, props: &[f64], lambdas: &[f64], kappa: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let m = mixture_survival(t, props, lambdas, kappa);
    ((theta * m).exp_m1() / theta.exp_m1()).clamp(0.0, 1.0)
}

/// Time at which the noncured conditional survival equals `u`, by bisection
/// on `ln t`.
pub fn noncured_quantile(u: f64, theta: f64, props: &[f64], lambdas: &[f64], kappa: f64) -> Result<f64> {
    check_inputs(theta, props, lambdas, kappa)?;
    if !(u > 0.0 && u < 1.0) {
        return Err(GptcmError::Domain(format!("survival level must lie in (0,1), got {u}")));
    }
    // Solve expm1(θ m)/expm1(θ) = u for the mixture survival m first; the
    // form below stays finite for large θ.
    let target = 1.0 + (u + (1.0 - u) * (-theta).exp()).ln() / theta;
    let m = |t: f64| mixture_survival(t, props, lambdas, kappa);
    let target = target.clamp(0.0, 1.0);

    let scale = lambdas.iter().copied().fold(0.0, f64::max);
    let mut hi = scale;
    while m(hi) > target {
        hi *= 2.0;
        if hi > MAX_TIME {
            return Err(GptcmError::Sampler(format!(
                "noncured time exceeds {MAX_TIME:e} (u = {u}, theta = {theta})"
            )));
        }
    }
    let mut lo = hi / 2.0;
    while m(lo) < target {
        lo /= 2.0;
        if lo < f64::MIN_POSITIVE {
            return Ok(f64::MIN_POSITIVE);
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if m(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Draws an event time from `f_pop(t) / (1 - e^{-θ})`, the law of a subject
/// who is not cured. Uses the inverse conditional survival function.
pub fn sample_noncured_time<R: Rng + ?Sized>(
    theta: f64,
    props: &[f64],
    lambdas: &[f64],
    kappa: f64,
    rng: &mut R,
) -> Result<f64> {
    let u: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    noncured_quantile(u, theta, props, lambdas, kappa)
}

/// Random-walk Metropolis alternative to [`sample_noncured_time`], run on
/// `ln t` for `steps` iterations from the mixture's largest scale.
pub fn sample_noncured_time_mh<R: Rng + ?Sized>(
    theta: f64,
    props: &[f64],
    lambdas: &[f64],
    kappa: f64,
    steps: usize,
    rng: &mut R,
) -> Result<f64> {
    check_inputs(theta, props, lambdas, kappa)?;
    let target = |z: f64| -> Result<f64> { Ok(population_log_density(z.exp(), theta, props, lambdas, kappa)? + z) };
    let step = Normal::new(0.0, 1.0 / kappa).expect("positive sd");
    let mut z = lambdas.iter().copied().fold(0.0, f64::max).ln();
    let mut fz = target(z)?;
    for _ in 0..steps {
        let cand = z + step.sample(rng);
        let t = cand.exp();
        if !(t > 0.0 && t.is_finite()) {
            continue;
        }
        let fc = target(cand)?;
        if rng.random::<f64>().ln() < fc - fz {
            z = cand;
            fz = fc;
        }
    }
    Ok(z.exp())
}
