//! Importance-sampling estimate of the observed-data likelihood
//! `p(m, y | x_obs, α, β, φ)`.
//!
//! Each of the N completions is drawn from its own counter-based stream
//! `(root_seed, iteration, k)`, so the per-sample log weights can be computed
//! on any number of threads. They are buffered and reduced in index order,
//! which keeps the result bit-identical regardless of worker count.

use rayon::prelude::*;

use crate::model::{Dataset, MissingFill, ModelSpec, ParamVector};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikEstimate {
    /// Log of the (unnormalised-weight) estimate; may be `−∞`.
    pub log_value: f64,
    pub n_samples: usize,
    pub root_seed: u64,
    pub iteration: u64,
}

/// Anything that can supply a log likelihood for the sampler.
pub trait LogLikelihood: Sync {
    fn log_likelihood(&self, theta: &ParamVector, iteration: u64) -> f64;
}

/// Draws one completion of the missing cells from the importance proposals.
///
/// Cells are drawn row by row and, within a row, in column order, so a
/// proposal may depend on earlier columns of the same row. Returns the fill
/// and `ln q_IS(fill)`; the log density is `−∞` if some proposal's
/// parameters are invalid at `theta` (the fill then holds NaN for that cell
/// and everything after it in the row).
pub fn draw_missing(data: &Dataset, spec: &ModelSpec, theta: &ParamVector, stream: RngStream) -> (MissingFill, f64) {
    let values = theta.values();
    let mut fill = vec![f64::NAN; data.n_missing()];
    let mut row = vec![0.0; data.n_cols()];
    let mut rng = stream.rng();
    let mut log_q = 0.0;
    for i in 0..data.n_rows() {
        if data.row_has_missing(i) {
            log_q += draw_row(data, spec, &values, i, &mut rng, &mut row, &mut fill);
        }
    }
    (
        MissingFill::new(data, fill).expect("fill sized from the dataset"),
        log_q,
    )
}

#[inline]
fn draw_row<R: rand::Rng>(
    data: &Dataset,
    spec: &ModelSpec,
    values: &[f64],
    i: usize,
    rng: &mut R,
    row: &mut [f64],
    fill: &mut [f64],
) -> f64 {
    row.copy_from_slice(data.observed_row(i));
    let y = data.y()[i];
    let mut log_q = 0.0;
    let mut params = [0.0; 3];
    for c in data.row_missing_range(i) {
        let j = data.missing_cells()[c].1;
        let proposal = &spec.entry_for_column(j).expect("checked by check_data").proposal;
        let k = proposal.eval_params(values, row, y, &mut params);
        let Some(x) = proposal.family.draw(&params[..k], rng) else {
            return f64::NEG_INFINITY;
        };
        row[j] = x;
        fill[c] = x;
        log_q += proposal.family.log_density(&params[..k], x);
    }
    log_q
}

/// Importance-sampling likelihood estimator with a fixed sample size.
#[derive(Debug, Clone, Copy)]
pub struct Estimator<'a> {
    pub data: &'a Dataset,
    pub spec: &'a ModelSpec,
    pub n_samples: usize,
    pub root_seed: u64,
}

impl<'a> Estimator<'a> {
    pub fn new(data: &'a Dataset, spec: &'a ModelSpec, n_samples: usize, root_seed: u64) -> Self {
        assert!(n_samples >= 1, "need at least one importance sample");
        Self {
            data,
            spec,
            n_samples,
            root_seed,
        }
    }

    /// Contribution of the fully observed rows, which no fill touches.
    fn complete_rows(&self, theta: &ParamVector) -> f64 {
        let (data, spec) = (self.data, self.spec);
        let complete = || (0..data.n_rows()).filter(|&i| !data.row_has_missing(i));
        let cond: f64 = complete()
            .map(|i| spec.row_cond_loglik(data.observed_row(i), data.y()[i], &theta.beta))
            .sum();
        let mech: f64 = complete()
            .map(|i| spec.row_mechanism(data, i, data.observed_row(i), &theta.phi))
            .sum();
        cond + mech
    }

    /// Log weight of the k-th completion, excluding the complete-row constant.
    fn log_weight(&self, theta: &ParamVector, values: &[f64], iteration: u64, k: usize, scratch: &mut Scratch) -> f64 {
        let (data, spec) = (self.data, self.spec);
        let mut rng = RngStream::importance(self.root_seed, iteration, k as u64).rng();
        let mut acc = 0.0;
        for i in 0..data.n_rows() {
            if !data.row_has_missing(i) {
                continue;
            }
            let log_q = draw_row(data, spec, values, i, &mut rng, &mut scratch.row, &mut scratch.fill);
            if log_q == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let row = &scratch.row;
            let y = data.y()[i];
            acc += spec.row_mechanism(data, i, row, &theta.phi)
                + spec.row_cond_loglik(row, y, &theta.beta)
                + spec.row_covariate(data, i, row, &theta.alpha)
                - log_q;
        }
        if acc.is_nan() {
            f64::NEG_INFINITY
        } else {
            acc
        }
    }

    /// Per-sample log weights `ln p(m|·) + ln p(y|·) + ln p(x_mis|·) − ln q`,
    /// in sample order.
    pub fn log_weights(&self, theta: &ParamVector, iteration: u64) -> Vec<f64> {
        let constant = self.complete_rows(theta);
        if self.data.n_missing() == 0 {
            return vec![constant; self.n_samples];
        }
        let values = theta.values();
        let min_len = (4096 / self.data.n_missing().max(1)).max(1);
        (0..self.n_samples)
            .into_par_iter()
            .with_min_len(min_len)
            .map_init(
                || Scratch::new(self.data),
                |scratch, k| constant + self.log_weight(theta, &values, iteration, k, scratch),
            )
            .collect()
    }

    pub fn estimate(&self, theta: &ParamVector, iteration: u64) -> LogLikEstimate {
        let log_value = if self.data.n_missing() == 0 {
            self.complete_rows(theta)
        } else {
            log_mean_exp(&self.log_weights(theta, iteration))
        };
        LogLikEstimate {
            log_value,
            n_samples: self.n_samples,
            root_seed: self.root_seed,
            iteration,
        }
    }
}

impl LogLikelihood for Estimator<'_> {
    fn log_likelihood(&self, theta: &ParamVector, iteration: u64) -> f64 {
        self.estimate(theta, iteration).log_value
    }
}

struct Scratch {
    row: Vec<f64>,
    fill: Vec<f64>,
}

impl Scratch {
    fn new(data: &Dataset) -> Self {
        Self {
            row: vec![0.0; data.n_cols()],
            fill: vec![0.0; data.n_missing()],
        }
    }
}

/// `ln(N⁻¹ Σ exp(wₖ))`, reduced in index order with the maximum factored out.
pub fn log_mean_exp(log_weights: &[f64]) -> f64 {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = log_weights.iter().map(|w| (w - max).exp()).sum();
    max + sum.ln() - (log_weights.len() as f64).ln()
}

pub fn estimate_loglik(
    data: &Dataset,
    spec: &ModelSpec,
    theta: &ParamVector,
    n_samples: usize,
    iteration: u64,
    root_seed: u64,
) -> LogLikEstimate {
    Estimator::new(data, spec, n_samples, root_seed).estimate(theta, iteration)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    /// Sample variance of the log estimates; `+∞` if any replicate was `−∞`.
    pub variance: f64,
    pub degenerate: usize,
    pub replicates: usize,
}

/// Spread of the log estimate at fixed `theta`. Replicate `r` uses iteration
/// index `r` of `root_seed`.
pub fn loglik_variance(
    data: &Dataset,
    spec: &ModelSpec,
    theta: &ParamVector,
    n_samples: usize,
    replicates: usize,
    root_seed: u64,
) -> VarianceReport {
    assert!(replicates >= 2, "need at least two replicates");
    let est = Estimator::new(data, spec, n_samples, root_seed);
    let logs: Vec<f64> = (0..replicates as u64)
        .map(|r| est.estimate(theta, r).log_value)
        .collect();
    let degenerate = logs.iter().filter(|v| !v.is_finite()).count();
    let variance = if degenerate > 0 {
        f64::INFINITY
    } else {
        sample_variance(&logs)
    };
    VarianceReport {
        variance,
        degenerate,
        replicates,
    }
}

pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    if xs.iter().all(|x| *x == xs[0]) {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
