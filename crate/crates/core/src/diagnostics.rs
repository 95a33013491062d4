//! Posterior summaries: split-half R̂, batch-means MCSE and equal-tail
//! credible intervals, all on the constrained scale.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::estimator::sample_variance;
use crate::sampler::Trace;

/// Gelman-Rubin potential scale reduction from the two halves of one chain.
///
/// With half-length `m`, `W` the mean of the two within-half variances and
/// `B` `m` times the variance of the two half means, returns
/// `√((W(m−1)/m + B/m) / W)`. Odd-length input drops its first draw. A chain
/// with zero within-half variance gives `+∞`. Inputs shorter than 4 give NaN.
pub fn split_rhat(samples: &[f64]) -> f64 {
    let samples = if samples.len() % 2 == 1 { &samples[1..] } else { samples };
    if samples.len() < 4 {
        return f64::NAN;
    }
    let m = samples.len() / 2;
    let (a, b) = samples.split_at(m);
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let w = 0.5 * (sample_variance(a) + sample_variance(b));
    if w <= 0.0 {
        return f64::INFINITY;
    }
    let grand = 0.5 * (ma + mb);
    let between = m as f64 * ((ma - grand).powi(2) + (mb - grand).powi(2));
    let mf = m as f64;
    ((w * (mf - 1.0) / mf + between / mf) / w).sqrt()
}

/// Batch-means Monte Carlo standard error with `⌊√n⌋` batches of size
/// `⌊n / batches⌋`; leading draws that do not fill a batch are dropped.
pub fn mcse(samples: &[f64]) -> f64 {
    let n = samples.len();
    let batches = (n as f64).sqrt().floor() as usize;
    if batches < 2 {
        return f64::NAN;
    }
    let size = n / batches;
    let tail = &samples[n - batches * size..];
    let means: Vec<f64> = tail
        .chunks_exact(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    (sample_variance(&means) / batches as f64).sqrt()
}

/// Empirical quantile with linear interpolation between order statistics
/// (`h = (n−1)p`). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(samples: &[f64], p: f64) -> f64 {
    quantile_sorted(&sorted(samples), p)
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

/// Equal-tail interval at `level` (e.g. 0.95 → 2.5% and 97.5% quantiles).
pub fn credible_interval(samples: &[f64], level: f64) -> (f64, f64) {
    let s = sorted(samples);
    let tail = 0.5 * (1.0 - level);
    (quantile_sorted(&s, tail), quantile_sorted(&s, 1.0 - tail))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub estimate: f64,
    pub mcse: f64,
    pub cred_lower: f64,
    pub cred_upper: f64,
    pub rhat: f64,
    /// Zero within-half variance; R̂ is reported as infinite.
    pub degenerate: bool,
}

/// One row per parameter over the rows after `burn_in`.
pub fn summarize(trace: &Trace, burn_in: usize) -> Result<Vec<SummaryRow>> {
    if burn_in >= trace.rows.len() {
        return Err(Error::Config(format!(
            "burn-in {burn_in} leaves no draws out of {}",
            trace.rows.len()
        )));
    }
    Ok(trace
        .meta
        .param_names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let xs = trace.column(k, burn_in);
            let (cred_lower, cred_upper) = credible_interval(&xs, 0.95);
            let rhat = split_rhat(&xs);
            SummaryRow {
                name: name.clone(),
                estimate: xs.iter().sum::<f64>() / xs.len() as f64,
                mcse: mcse(&xs),
                cred_lower,
                cred_upper,
                rhat,
                degenerate: rhat == f64::INFINITY,
            }
        })
        .collect())
}

/// Aligned plain-text table: param, estimate, MCSE, 95% interval, R̂.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>9}  {:>24}  {:>7}",
        "param", "estimate", "mcse", "95% cred.", "rhat"
    );
    for r in rows {
        let interval = format!("({:.4}, {:.4})", r.cred_lower, r.cred_upper);
        let rhat = if r.degenerate {
            "inf*".to_string()
        } else {
            format!("{:.3}", r.rhat)
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.4}  {:>9.5}  {:>24}  {:>7}",
            r.name, r.estimate, r.mcse, interval, rhat
        );
    }
    if rows.iter().any(|r| r.degenerate) {
        out.push_str("* degenerate chain: zero within-half variance\n");
    }
    out
}
