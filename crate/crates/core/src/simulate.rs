//! Synthetic data from the configured generative model.
//!
//! Each row uses its own stream, so output depends only on `(config, seed)`.
//! Covariates are drawn column by column (from a generator if one is given,
//! otherwise from the column's covariate model at the true alpha), the
//! response from the logistic likelihood at the true beta, and inclusion
//! indicators from the mechanism at the true phi.

use std::collections::BTreeMap;

use rand::Rng;

use crate::config::{RunConfig, Scope};
use crate::error::{Error, Result};
use crate::model::{sigmoid, Conditional, Mechanism};
use crate::rng::{RngStream, Slot};
use crate::Dataset;

pub fn simulate(config: &RunConfig, seed: u64) -> Result<(Dataset, BTreeMap<String, f64>)> {
    let sim = config
        .simulate
        .as_ref()
        .ok_or_else(|| Error::Config("no [simulate] section".into()))?;
    let spec = config.model_spec()?;
    let theta = crate::config::theta_from_map(&spec, &sim.truth)?;
    let values = theta.values();
    let p = config.data.columns.len();

    // Per-column sampler; global parameter indices throughout.
    let mut generators: Vec<Option<Conditional>> = vec![None; p];
    for g in &sim.generators {
        let j = config
            .data
            .columns
            .iter()
            .position(|c| c == &g.column)
            .ok_or_else(|| Error::Config(format!("generator for unknown column `{}`", g.column)))?;
        let cond = config.conditional(g.family, &g.params, Scope::Global)?;
        if let Some(c) = cond.params.iter().flat_map(|e| e.columns()).find(|&c| c >= j) {
            return Err(Error::Config(format!(
                "generator for `{}` depends on column {c}, which is not drawn yet",
                g.column
            )));
        }
        if cond.params.iter().any(|e| e.uses_response()) {
            return Err(Error::Config("generators may not depend on the response".into()));
        }
        generators[j] = Some(cond);
    }
    for (j, slot) in generators.iter_mut().enumerate() {
        if slot.is_none() {
            // covariate models index alpha, which leads the global vector
            *slot = spec.entry_for_column(j).map(|e| e.model.clone());
        }
        if slot.is_none() {
            return Err(Error::Config(format!(
                "column `{}` has neither a generator nor a covariate model",
                config.data.columns[j]
            )));
        }
    }

    let mut ys = Vec::with_capacity(sim.rows);
    let mut rows = Vec::with_capacity(sim.rows);
    let mut params = [0.0; 3];
    for i in 0..sim.rows {
        let mut rng = RngStream::new(seed, 0, Slot::Simulate(i as u64)).rng();
        let mut row = vec![0.0; p];
        for j in 0..p {
            let cond = generators[j].as_ref().expect("filled above");
            let k = cond.eval_params(&values, &row, 0.0, &mut params);
            row[j] = cond.family.draw(&params[..k], &mut rng).ok_or_else(|| {
                Error::Config(format!(
                    "invalid generator parameters {:?} for column `{}`",
                    &params[..k],
                    config.data.columns[j]
                ))
            })?;
        }
        let eta = spec.design.linear_predictor(&row, &theta.beta);
        let y = if rng.random::<f64>() < sigmoid(eta) { 1.0 } else { 0.0 };
        let mut observed = vec![true; p];
        if let Mechanism::Logistic { columns, logit } = &spec.mechanism {
            for &j in columns {
                let pr = sigmoid(logit.eval(&theta.phi, &row, y));
                observed[j] = rng.random::<f64>() < pr;
            }
        }
        ys.push(y);
        rows.push(row.iter().zip(&observed).map(|(v, o)| o.then_some(*v)).collect());
    }
    let data = Dataset::new(ys, rows, config.data.columns.clone())?;
    Ok((data, sim.truth.clone()))
}
