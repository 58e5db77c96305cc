//! Model-free parts of the spike-and-slab indicator move: the symmetric
//! single-flip proposal and the Metropolis accept step.

use rand::Rng;

/// Flip of one indicator within a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipProposal {
    pub index: usize,
    /// True for a 0→1 (birth) move.
    pub to_active: bool,
}

/// Picks one coordinate uniformly and proposes flipping it. The proposal
/// is symmetric, so its ratio is 1 in the acceptance probability.
pub fn propose_flip<R: Rng + ?Sized>(flags: &[bool], rng: &mut R) -> Option<FlipProposal> {
    if flags.is_empty() {
        return None;
    }
    let index = rng.random_range(0..flags.len());
    Some(FlipProposal {
        index,
        to_active: !flags[index],
    })
}

/// Accepts with probability `min(1, exp(log_ratio))`; NaN is rejected.
pub fn metropolis_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}
