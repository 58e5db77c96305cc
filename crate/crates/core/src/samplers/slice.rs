//! Univariate slice sampler with stepping out and shrinkage.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{LogDensity, SamplerDiagnostics};
use crate::error::{GptcmError, Result};

const MAX_SHRINKS: usize = 500;

/// One slice-sampling update from `x0`.
///
/// The bracket of width `width` is placed uniformly around `x0` and grown by
/// at most `max_steps` steps in total; if the limit is reached the current
/// bracket is shrunk as usual, which keeps the target invariant.
pub fn slice_sample<F, R>(
    ld: &mut LogDensity<F>,
    x0: f64,
    width: f64,
    max_steps: usize,
    rng: &mut R,
    diag: &mut SamplerDiagnostics,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    R: Rng + ?Sized,
{
    if !(width > 0.0) {
        return Err(GptcmError::Contract(format!("slice width must be positive, got {width}")));
    }
    let f0 = ld.eval(x0);
    diag.evaluations += 1;
    if !f0.is_finite() {
        return Err(GptcmError::Contract(format!("slice sampler started at x0 = {x0} with log density {f0}")));
    }
    let e: f64 = Exp1.sample(rng);
    let level = f0 - e;

    let u: f64 = rng.random();
    let mut left = x0 - width * u;
    let mut right = left + width;
    let v: f64 = rng.random();
    let mut j = (max_steps as f64 * v).floor() as usize;
    let mut k = max_steps.saturating_sub(1).saturating_sub(j);
    while j > 0 && left > ld.lower && ld.eval(left) > level {
        diag.evaluations += 1;
        diag.slice_expansions += 1;
        left -= width;
        j -= 1;
    }
    while k > 0 && right < ld.upper && ld.eval(right) > level {
        diag.evaluations += 1;
        diag.slice_expansions += 1;
        right += width;
        k -= 1;
    }
    left = left.max(ld.lower);
    right = right.min(ld.upper);

    for _ in 0..MAX_SHRINKS {
        let u: f64 = rng.random();
        let x1 = left + u * (right - left);
        let f1 = ld.eval(x1);
        diag.evaluations += 1;
        diag.proposals += 1;
        if f1 > level {
            diag.acceptances += 1;
            return Ok(x1);
        }
        diag.slice_shrinks += 1;
        if x1 < x0 {
            left = x1;
        } else {
            right = x1;
        }
    }
    Err(GptcmError::Sampler(format!("slice shrinkage did not terminate around x0 = {x0}")))
}
