//! Monte Carlo: sampling from a model's observation law, convergence-rate
//! experiments for moment estimators, and perturbation paths along which a
//! functional cannot be estimated faster than a given rate.

mod path;
mod rates;
mod simulate;

pub use path::{impossibility_path, PathPoint, PathReport, MAX_CLIP};
pub use rates::{fit_slope, rate_experiment, rate_experiment_with, RateFit};
pub use simulate::{replication_rng, simulate, Sampler, Samples};
