//! Negative log estimated likelihood over a two-parameter grid with every
//! other parameter held fixed, for looking at how rough the estimate is as a
//! function of N.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Estimator;
use crate::model::{Dataset, ModelSpec, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// New completions at every grid point (what a sampler sees).
    Fresh,
    /// The same random streams at every grid point of a replicate.
    Common,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        (0..self.steps)
            .map(|s| self.lo + (self.hi - self.lo) * s as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub replicate: usize,
    pub a: f64,
    pub b: f64,
    pub neg_log_lik: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn surface(
    data: &Dataset,
    spec: &ModelSpec,
    theta_fixed: &ParamVector,
    axis_a: &Axis,
    axis_b: &Axis,
    n_importance: usize,
    root_seed: u64,
    mode: SeedMode,
    replicates: usize,
) -> Result<Vec<SurfacePoint>> {
    let index = |name: &str| {
        spec.param_index(name)
            .ok_or_else(|| Error::Config(format!("unknown surface parameter `{name}`")))
    };
    let (ia, ib) = (index(&axis_a.param)?, index(&axis_b.param)?);
    if ia == ib {
        return Err(Error::Config("surface parameters must differ".into()));
    }
    if axis_a.steps == 0 || axis_b.steps == 0 || n_importance == 0 {
        return Err(Error::Config(
            "surface needs at least one step per axis and N >= 1".into(),
        ));
    }
    spec.check_data(data)?;
    let est = Estimator::new(data, spec, n_importance, root_seed);
    let (va, vb) = (axis_a.values(), axis_b.values());
    let n_points = (va.len() * vb.len()) as u64;
    let base = theta_fixed.values();
    let mut out = Vec::with_capacity(replicates * va.len() * vb.len());
    for r in 0..replicates {
        for (ka, &a) in va.iter().enumerate() {
            for (kb, &b) in vb.iter().enumerate() {
                let mut v = base.clone();
                v[ia] = a;
                v[ib] = b;
                let theta = theta_fixed.with_values(&v);
                let iteration = match mode {
                    SeedMode::Fresh => r as u64 * n_points + (ka * vb.len() + kb) as u64,
                    SeedMode::Common => r as u64,
                };
                out.push(SurfacePoint {
                    replicate: r,
                    a,
                    b,
                    neg_log_lik: -est.estimate(&theta, iteration).log_value,
                });
            }
        }
    }
    Ok(out)
}

pub fn surface_csv(points: &[SurfacePoint], name_a: &str, name_b: &str) -> String {
    let mut s = format!("replicate,{name_a},{name_b},neg_log_lik\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.replicate, p.a, p.b, p.neg_log_lik);
    }
    s
}

/// Mean absolute difference between replicates `r1` and `r2` of a surface.
pub fn replicate_difference(points: &[SurfacePoint], r1: usize, r2: usize) -> f64 {
    let a: Vec<f64> = points
        .iter()
        .filter(|p| p.replicate == r1)
        .map(|p| p.neg_log_lik)
        .collect();
    let b: Vec<f64> = points
        .iter()
        .filter(|p| p.replicate == r2)
        .map(|p| p.neg_log_lik)
        .collect();
    assert_eq!(a.len(), b.len(), "replicates have different grids");
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}
