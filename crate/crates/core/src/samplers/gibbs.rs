use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::error::{GptcmError, Result};

fn check(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GptcmError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Exact draw from the inverse-gamma distribution with the given shape and
/// rate (density ∝ x^{−shape−1} e^{−rate/x}).
pub fn gibbs_draw_invgamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    check("shape", shape)?;
    check("rate", rate)?;
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| GptcmError::Domain(e.to_string()))?;
    loop {
        let x = g.sample(rng);
        if x > 0.0 {
            return Ok(1.0 / x);
        }
    }
}

/// Exact draw from Beta(a, b), kept strictly inside (0, 1).
pub fn gibbs_draw_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    check("a", a)?;
    check("b", b)?;
    let d = Beta::new(a, b).map_err(|e| GptcmError::Domain(e.to_string()))?;
    Ok(d.sample(rng).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
}
