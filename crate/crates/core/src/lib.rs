//! Bayesian logistic regression with missing covariates, estimated by
//! pseudo-marginal Metropolis-Hastings.
//!
//! The observed-data likelihood `p(m, y | x_obs, α, β, φ)` integrates the
//! missing covariates out of the logistic likelihood, the covariate model and
//! the missingness mechanism. It is replaced in the acceptance ratio by an
//! unbiased importance-sampling estimate ([`estimator`]), which leaves the
//! chain's stationary distribution unchanged ([`sampler`]).

pub mod cli;
pub mod config;
pub mod data;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod expr;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod simulate;
pub mod surface;
pub mod tuning;

pub use config::RunConfig;
pub use distributions::{DistributionSpec, Family};
pub use error::{Error, Result};
pub use estimator::{estimate_loglik, loglik_variance, Estimator, LogLikEstimate};
pub use model::{Dataset, MissingFill, ModelSpec, ParamVector, Transform};
pub use rng::RngStream;
pub use sampler::{run_chain, run_exact_chain, ProposalSpec, Trace};
