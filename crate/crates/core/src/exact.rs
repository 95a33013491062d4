//! Exact observed-data likelihood by enumerating missing completions.
//!
//! Only covariate models with finite support (Bernoulli) can be enumerated.
//! Rows are independent, so the likelihood is a product over rows of sums
//! over that row's completions; the cap bounds the per-row enumeration.

use crate::distributions::Family;
use crate::error::{Error, Result};
use crate::estimator::{log_mean_exp, LogLikelihood};
use crate::model::{Dataset, ModelSpec, ParamVector};

pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

#[derive(Debug, Clone, Copy)]
pub struct ExactLikelihood<'a> {
    data: &'a Dataset,
    spec: &'a ModelSpec,
}

impl<'a> ExactLikelihood<'a> {
    /// Fails if any missing cell has infinite support or a row needs more
    /// than `cap` completions.
    pub fn new(data: &'a Dataset, spec: &'a ModelSpec, cap: u128) -> Result<Self> {
        spec.check_data(data)?;
        for &(_, j) in data.missing_cells() {
            let entry = spec.entry_for_column(j).expect("checked by check_data");
            if entry.model.family != Family::Bernoulli {
                return Err(Error::NotEnumerable(data.column_names()[j].clone()));
            }
        }
        for i in 0..data.n_rows() {
            let cells = data.row_missing_range(i).len() as u32;
            let needed = 1u128.checked_shl(cells).unwrap_or(u128::MAX);
            if needed > cap {
                return Err(Error::EnumerationCap { needed, cap });
            }
        }
        Ok(Self { data, spec })
    }

    pub fn log_likelihood_at(&self, theta: &ParamVector) -> f64 {
        let (data, spec) = (self.data, self.spec);
        let mut row = vec![0.0; data.n_cols()];
        let mut total = 0.0;
        for i in 0..data.n_rows() {
            let y = data.y()[i];
            let range = data.row_missing_range(i);
            if range.is_empty() {
                let r = data.observed_row(i);
                total += spec.row_cond_loglik(r, y, &theta.beta) + spec.row_mechanism(data, i, r, &theta.phi);
                continue;
            }
            let cells = &data.missing_cells()[range];
            let count = 1usize << cells.len();
            let terms: Vec<f64> = (0..count)
                .map(|bits| {
                    row.copy_from_slice(data.observed_row(i));
                    for (b, &(_, j)) in cells.iter().enumerate() {
                        row[j] = ((bits >> b) & 1) as f64;
                    }
                    spec.row_mechanism(data, i, &row, &theta.phi)
                        + spec.row_cond_loglik(&row, y, &theta.beta)
                        + spec.row_covariate(data, i, &row, &theta.alpha)
                })
                .collect();
            // log of the sum, not the mean
            total += log_mean_exp(&terms) + (count as f64).ln();
        }
        total
    }
}

impl LogLikelihood for ExactLikelihood<'_> {
    fn log_likelihood(&self, theta: &ParamVector, _iteration: u64) -> f64 {
        self.log_likelihood_at(theta)
    }
}
