//! Bayesian generalized promotion time cure models with cell-type
//! proportions, measurement error in the proportions, and spike-and-slab
//! variable selection under Bernoulli or Markov random field priors.

pub mod error;
pub mod evaluation;
pub mod io;
pub mod model;
pub mod mcmc;
pub mod samplers;
pub mod simulation;

pub use error::{GptcmError, Result};
