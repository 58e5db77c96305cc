//! Model definition: data and parameter types, densities, likelihood,
//! priors and full conditionals.

pub mod cache;
pub mod conditionals;
pub mod density;
pub mod likelihood;
pub mod prior;
pub mod types;

pub use cache::ModelCache;
pub use conditionals::{
    conjugate_posteriors, logcond, logcond_beta, logcond_beta0, logcond_kappa, logcond_xi, logcond_xi0,
    logcond_zeta, logcond_zeta0, BetaParams, ConjugatePosteriors, Coord, InvGammaParams,
};
pub use density::{
    dirichlet_log_density, population_log_density, population_log_survival, population_survival,
    weibull_scale_from_mean, weibull_survival,
};
pub use likelihood::{linear_predictors, log_likelihood, pointwise_log_likelihood};
pub use prior::{log_prior, mrf_log_prior};
pub use types::{
    DerivedQuantities, HyperParams, ModelSpec, MrfGraph, ParameterState, Selection, SurvivalDataset, Variant,
};
