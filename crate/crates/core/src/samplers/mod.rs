//! Generic univariate samplers and RNG primitives, independent of the model.

pub mod arms;
pub mod gibbs;
pub mod indicator;
pub mod rng;
pub mod slice;

pub use arms::{arms_sample, ArmsOptions};
pub use gibbs::{gibbs_draw_beta, gibbs_draw_invgamma};
pub use indicator::{metropolis_accept, propose_flip, FlipProposal};
pub use rng::{stream_rng, Block, StreamRng};
pub use slice::slice_sample;

/// A log density (up to a constant) restricted to `[lower, upper]`.
pub struct LogDensity<F> {
    f: F,
    pub lower: f64,
    pub upper: f64,
}

impl<F: FnMut(f64) -> f64> LogDensity<F> {
    /// Density on the whole real line.
    pub fn new(f: F) -> Self {
        Self {
            f,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn with_bounds(f: F, lower: f64, upper: f64) -> Self {
        Self { f, lower, upper }
    }

    /// Log density at `x`; `−∞` outside the support.
    #[inline]
    pub fn eval(&mut self, x: f64) -> f64 {
        if x < self.lower || x > self.upper || x.is_nan() {
            f64::NEG_INFINITY
        } else {
            let v = (self.f)(x);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Counters accumulated by the samplers for one parameter block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SamplerDiagnostics {
    pub proposals: u64,
    pub acceptances: u64,
    pub evaluations: u64,
    pub slice_expansions: u64,
    pub slice_shrinks: u64,
    pub arms_rebuilds: u64,
    pub clamp_events: u64,
}

impl SamplerDiagnostics {
    pub fn merge(&mut self, other: &SamplerDiagnostics) {
        self.proposals += other.proposals;
        self.acceptances += other.acceptances;
        self.evaluations += other.evaluations;
        self.slice_expansions += other.slice_expansions;
        self.slice_shrinks += other.slice_shrinks;
        self.arms_rebuilds += other.arms_rebuilds;
        self.clamp_events += other.clamp_events;
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposals > 0).then(|| self.acceptances as f64 / self.proposals as f64)
    }
}
