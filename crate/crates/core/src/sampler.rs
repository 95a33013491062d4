//! Pseudo-marginal Metropolis-Hastings.
//!
//! The chain walks the unconstrained image of the parameters with a symmetric
//! Gaussian random walk, so the proposal-density ratio is identically one and
//! is left out of the acceptance ratio. The likelihood estimate for the
//! current state is the one computed when that state was accepted; it is
//! never refreshed.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Estimator, LogLikelihood};
use crate::exact::ExactLikelihood;
use crate::model::{log_jacobian, Dataset, ModelSpec, ParamVector};
use crate::rng::{RngStream, Slot};

/// Random-walk scales on the unconstrained space, or a full covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSpec {
    scales: Vec<f64>,
    cholesky: Option<Vec<Vec<f64>>>,
}

impl ProposalSpec {
    /// Independent Gaussian steps. Zero scales are allowed and pin a coordinate.
    pub fn diagonal(scales: Vec<f64>) -> Result<Self> {
        if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::Config(format!(
                "proposal scale {s} must be finite and non-negative"
            )));
        }
        Ok(Self { scales, cholesky: None })
    }

    /// Correlated Gaussian steps with the given covariance matrix.
    pub fn dense(covariance: Vec<Vec<f64>>) -> Result<Self> {
        let n = covariance.len();
        if covariance.iter().any(|r| r.len() != n) {
            return Err(Error::Config("proposal covariance must be square".into()));
        }
        for (i, row) in covariance.iter().enumerate() {
            for (j, &v) in row.iter().enumerate().take(i) {
                if (v - covariance[j][i]).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(Error::Config("proposal covariance must be symmetric".into()));
                }
            }
        }
        let l = cholesky(&covariance)
            .ok_or_else(|| Error::Config("proposal covariance must be positive definite".into()))?;
        Ok(Self {
            scales: (0..n).map(|i| covariance[i][i].sqrt()).collect(),
            cholesky: Some(l),
        })
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    /// Marginal step standard deviations.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    fn step(&self, stream: RngStream) -> Vec<f64> {
        let mut rng = stream.rng();
        let z: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        match &self.cholesky {
            None => z.iter().zip(&self.scales).map(|(z, s)| z * s).collect(),
            Some(l) => l
                .iter()
                .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum())
                .collect(),
        }
    }
}

fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 || !d.is_finite() {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Random-walk proposal: unconstrained coordinates plus Gaussian noise.
pub fn propose(theta: &ParamVector, prop: &ProposalSpec, stream: RngStream) -> ParamVector {
    let u = theta.to_unconstrained();
    assert_eq!(u.len(), prop.dim(), "proposal dimension");
    let step = prop.step(stream);
    let moved: Vec<f64> = u.iter().zip(&step).map(|(u, s)| u + s).collect();
    theta.from_unconstrained(&moved)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub theta: ParamVector,
    pub stored_log_estimate: f64,
    pub iteration: u64,
    pub accepted_count: u64,
}

/// Log prior on the constrained scale plus the log Jacobian of the
/// unconstrained-to-constrained map: the log target density of the
/// unconstrained walk, up to the likelihood.
pub fn log_prior_unconstrained(theta: &ParamVector, spec: &ModelSpec) -> f64 {
    let lp = spec.log_prior(theta);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + log_jacobian(&theta.to_unconstrained(), &theta.transforms)
}

/// Log Metropolis-Hastings ratio for moving from `current` to `proposal`.
///
/// `[ln p̂' + ln p(θ') + ln J(u')] − [ln p̂ + ln p(θ) + ln J(u)]`; the random
/// walk is symmetric so `q(θ|θ')/q(θ'|θ) = 1`. A proposal with any `−∞` term
/// gets `−∞`. A current state whose stored estimate is `−∞` gets `+∞` for any
/// finite proposal, which forces the chain off a degenerate start.
pub fn accept_log_ratio(
    current: &ChainState,
    proposal: &ParamVector,
    proposal_log_estimate: f64,
    spec: &ModelSpec,
) -> f64 {
    let num_prior = log_prior_unconstrained(proposal, spec);
    if num_prior == f64::NEG_INFINITY || proposal_log_estimate == f64::NEG_INFINITY || proposal_log_estimate.is_nan() {
        return f64::NEG_INFINITY;
    }
    if current.stored_log_estimate == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let den_prior = log_prior_unconstrained(&current.theta, spec);
    (proposal_log_estimate + num_prior) - (current.stored_log_estimate + den_prior)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Constrained-scale values in parameter order.
    pub theta: Vec<f64>,
    pub log_estimate: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub param_names: Vec<String>,
    /// Importance samples per estimate; 0 for exact-likelihood chains.
    pub n_importance: usize,
    pub seed: u64,
    pub proposal_scales: Vec<f64>,
    pub iterations: usize,
    pub burn_in: usize,
    pub accepted: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub meta: TraceMeta,
}

impl Trace {
    pub fn acceptance_rate(&self) -> f64 {
        self.rows.iter().filter(|r| r.accepted).count() as f64 / self.rows.len() as f64
    }

    /// Samples of parameter `k` after dropping `burn_in` rows.
    pub fn column(&self, k: usize, burn_in: usize) -> Vec<f64> {
        self.rows.iter().skip(burn_in).map(|r| r.theta[k]).collect()
    }
}

/// Runs `iterations` Metropolis-Hastings steps with any likelihood source.
///
/// Iteration `i` (1-based) draws its proposal noise, accept uniform and
/// likelihood estimate from streams `(root_seed, i, ·)`; the initial estimate
/// uses iteration 0.
pub fn run_with<L: LogLikelihood>(
    likelihood: &L,
    spec: &ModelSpec,
    prop: &ProposalSpec,
    init: &ParamVector,
    iterations: usize,
    root_seed: u64,
    n_importance: usize,
) -> Result<Trace> {
    if iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    if prop.dim() != init.len() {
        return Err(Error::Dimension {
            what: "proposal scales vs parameters",
            expected: init.len(),
            got: prop.dim(),
        });
    }
    let lp = log_prior_unconstrained(init, spec);
    if !lp.is_finite() {
        return Err(Error::NonFiniteInit(lp));
    }
    let mut state = ChainState {
        theta: init.clone(),
        stored_log_estimate: likelihood.log_likelihood(init, 0),
        iteration: 0,
        accepted_count: 0,
    };
    let mut rows = Vec::with_capacity(iterations);
    for i in 1..=iterations as u64 {
        let proposal = propose(&state.theta, prop, RngStream::new(root_seed, i, Slot::Proposal));
        let accepted = if log_prior_unconstrained(&proposal, spec) == f64::NEG_INFINITY {
            // certain rejection; the estimate would not change the outcome
            false
        } else {
            let estimate = likelihood.log_likelihood(&proposal, i);
            let ratio = accept_log_ratio(&state, &proposal, estimate, spec);
            let u: f64 = rand::Rng::random(&mut RngStream::new(root_seed, i, Slot::Accept).rng());
            let accept = u.ln() < ratio.min(0.0);
            if accept {
                state.theta = proposal;
                state.stored_log_estimate = estimate;
                state.accepted_count += 1;
            }
            accept
        };
        state.iteration = i;
        rows.push(TraceRow {
            theta: state.theta.values(),
            log_estimate: state.stored_log_estimate,
            accepted,
        });
    }
    Ok(Trace {
        rows,
        meta: TraceMeta {
            param_names: spec.param_names(),
            n_importance,
            seed: root_seed,
            proposal_scales: prop.scales().to_vec(),
            iterations,
            burn_in: 0,
            accepted: state.accepted_count,
        },
    })
}

/// Pseudo-marginal chain with an `n_importance`-sample estimator.
pub fn run_chain(
    data: &Dataset,
    spec: &ModelSpec,
    prop: &ProposalSpec,
    init: &ParamVector,
    iterations: usize,
    n_importance: usize,
    root_seed: u64,
) -> Result<Trace> {
    spec.check_data(data)?;
    if n_importance == 0 {
        return Err(Error::Config("need at least one importance sample".into()));
    }
    let est = Estimator::new(data, spec, n_importance, root_seed);
    run_with(&est, spec, prop, init, iterations, root_seed, n_importance)
}

/// Marginal chain with the exact likelihood computed by enumeration.
pub fn run_exact_chain(
    data: &Dataset,
    spec: &ModelSpec,
    prop: &ProposalSpec,
    init: &ParamVector,
    iterations: usize,
    root_seed: u64,
    cap: u128,
) -> Result<Trace> {
    let exact = ExactLikelihood::new(data, spec, cap)?;
    run_with(&exact, spec, prop, init, iterations, root_seed, 0)
}

/// Draws an initial state from the priors, retrying draws that fall outside a
/// transform's domain (e.g. a probability with a prior supported beyond 1).
pub fn draw_init(spec: &ModelSpec, root_seed: u64) -> Result<ParamVector> {
    for attempt in 0..1000u64 {
        let mut rng = RngStream::new(root_seed, 0, Slot::Init(attempt)).rng();
        let values: Vec<f64> = spec.params.iter().map(|p| p.prior.sample(&mut rng)).collect();
        let theta = spec.param_vector(&values)?;
        if log_prior_unconstrained(&theta, spec).is_finite() {
            return Ok(theta);
        }
    }
    Err(Error::Config(
        "could not draw an initial state inside the parameter domain".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = vec![vec![4.0, 2.0, 0.4], vec![2.0, 3.0, 0.5], vec![0.4, 0.5, 1.0]];
        let l = cholesky(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i][k] * l[j][k]).sum();
                assert!((v - a[i][j]).abs() < 1e-12);
            }
        }
        assert!(cholesky(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_none());
    }

    #[test]
    fn proposal_validation() {
        assert!(ProposalSpec::diagonal(vec![0.1, -1.0]).is_err());
        assert!(ProposalSpec::diagonal(vec![0.0, 0.0]).is_ok());
        assert!(ProposalSpec::dense(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(ProposalSpec::dense(vec![vec![1.0, 0.5], vec![0.5, 1.0]]).is_ok());
    }
}
