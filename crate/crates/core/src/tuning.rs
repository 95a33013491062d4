//! Choosing the number of importance samples.
//!
//! The usual rule is to pick N so that the variance of the log-likelihood
//! estimate at a representative parameter value is between 1 and 2. `tune`
//! measures that variance over a grid of N and recommends the smallest N at
//! or below the threshold.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::estimator::{loglik_variance, VarianceReport};
use crate::model::{Dataset, ModelSpec, ParamVector};

pub const VARIANCE_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TuneRow {
    pub n: usize,
    pub variance: f64,
    pub degenerate: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub rows: Vec<TuneRow>,
    /// Smallest N with variance at or below the threshold.
    pub recommended: Option<usize>,
}

impl TuneReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,variance,degenerate,replicates\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.n, r.variance, r.degenerate, r.replicates);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:>8}  {:>12}  {:>10}\n", "N", "var(log L)", "degenerate");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>8}  {:>12.4}  {:>7}/{}",
                r.n, r.variance, r.degenerate, r.replicates
            );
        }
        match self.recommended {
            Some(n) => {
                let _ = writeln!(s, "recommended N = {n} (variance <= {VARIANCE_THRESHOLD})");
            }
            None => {
                let _ = writeln!(
                    s,
                    "no N in the grid reaches variance <= {VARIANCE_THRESHOLD}; try larger N or a better proposal"
                );
            }
        }
        s
    }
}

/// Variance of the log estimate at each grid N. All grid entries share the
/// root seed, so larger N reuse the smaller N's samples as a prefix.
pub fn tune(
    data: &Dataset,
    spec: &ModelSpec,
    theta: &ParamVector,
    grid: &[usize],
    replicates: usize,
    root_seed: u64,
) -> Result<TuneReport> {
    if replicates < 2 {
        return Err(Error::Config("tuning needs at least two replicates".into()));
    }
    if grid.is_empty() || grid.contains(&0) {
        return Err(Error::Config("tuning grid must be non-empty with N >= 1".into()));
    }
    spec.check_data(data)?;
    let rows: Vec<TuneRow> = grid
        .iter()
        .map(|&n| {
            let VarianceReport {
                variance,
                degenerate,
                replicates,
            } = loglik_variance(data, spec, theta, n, replicates, root_seed);
            TuneRow {
                n,
                variance,
                degenerate,
                replicates,
            }
        })
        .collect();
    if rows.iter().all(|r| r.degenerate == r.replicates) {
        return Err(Error::AllDegenerate);
    }
    let recommended = rows
        .iter()
        .filter(|r| r.variance <= VARIANCE_THRESHOLD)
        .map(|r| r.n)
        .min();
    Ok(TuneReport { rows, recommended })
}
