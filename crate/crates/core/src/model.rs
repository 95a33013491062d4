//! The generative model: logistic conditional likelihood, sequential
//! covariate model for the missing cells, logistic missingness mechanism,
//! independent priors, and parameter transforms.
//!
//! Everything here is a pure log-density evaluation. Row-level kernels are
//! exposed to the estimator so it can evaluate one completion at a time
//! without materialising whole-dataset fills.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::expr::Affine;

// ---------------------------------------------------------------------------
// Dataset and fills

/// Responses, covariates and the inclusion mask (`true` = observed).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: Vec<f64>,
    mask: Vec<bool>,
    column_names: Vec<String>,
    n_cols: usize,
    missing: Vec<(usize, usize)>,
    row_offsets: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from rows of optional covariate values.
    pub fn new(y: Vec<f64>, rows: Vec<Vec<Option<f64>>>, column_names: Vec<String>) -> Result<Self> {
        let n_cols = column_names.len();
        if rows.len() != y.len() {
            return Err(Error::Dimension {
                what: "covariate rows vs responses",
                expected: y.len(),
                got: rows.len(),
            });
        }
        if let Some(bad) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::Dataset(format!("response value {bad} is not 0 or 1")));
        }
        let mut x = Vec::with_capacity(rows.len() * n_cols);
        let mut mask = Vec::with_capacity(rows.len() * n_cols);
        let mut missing = Vec::new();
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Dataset(format!(
                    "row {i} has {} values, expected {n_cols}",
                    row.len()
                )));
            }
            row_offsets.push(missing.len());
            for (j, v) in row.iter().enumerate() {
                match v {
                    Some(v) if v.is_finite() => {
                        x.push(*v);
                        mask.push(true);
                    }
                    Some(v) => return Err(Error::Dataset(format!("row {i} column {j}: non-finite value {v}"))),
                    None => {
                        x.push(0.0);
                        mask.push(false);
                        missing.push((i, j));
                    }
                }
            }
        }
        row_offsets.push(missing.len());
        Ok(Self {
            y,
            x,
            mask,
            column_names,
            n_cols,
            missing,
            row_offsets,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n_cols + j]
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.is_observed(i, j).then(|| self.x[i * self.n_cols + j])
    }

    /// All missing cells in row-major order; fills are indexed the same way.
    pub fn missing_cells(&self) -> &[(usize, usize)] {
        &self.missing
    }

    pub fn n_missing(&self) -> usize {
        self.missing.len()
    }

    /// Range into [`Self::missing_cells`] for row `i`.
    pub fn row_missing_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_offsets[i]..self.row_offsets[i + 1]
    }

    pub fn row_has_missing(&self, i: usize) -> bool {
        self.row_offsets[i] != self.row_offsets[i + 1]
    }

    pub fn column_missing_fraction(&self, j: usize) -> f64 {
        let n = self.n_rows();
        if n == 0 {
            return 0.0;
        }
        (0..n).filter(|&i| !self.is_observed(i, j)).count() as f64 / n as f64
    }

    /// Observed values of row `i` with missing cells left at zero.
    pub fn observed_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Copies row `i` into `buf`, taking missing cells from `fill`.
    pub fn complete_row(&self, i: usize, fill: &[f64], buf: &mut [f64]) {
        buf.copy_from_slice(self.observed_row(i));
        for c in self.row_missing_range(i) {
            buf[self.missing[c].1] = fill[c];
        }
    }
}

/// Values for exactly the missing cells of a dataset, in
/// [`Dataset::missing_cells`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingFill {
    values: Vec<f64>,
}

impl MissingFill {
    pub fn new(data: &Dataset, values: Vec<f64>) -> Result<Self> {
        if values.len() != data.n_missing() {
            return Err(Error::Dimension {
                what: "fill values vs missing cells",
                expected: data.n_missing(),
                got: values.len(),
            });
        }
        Ok(Self { values })
    }

    pub fn empty() -> Self {
        Self { values: Vec::new() }
    }

    /// Builds a fill from an `(i, j) -> value` map whose keys must be exactly
    /// the missing cells.
    pub fn from_map(data: &Dataset, map: &HashMap<(usize, usize), f64>) -> Result<Self> {
        if map.len() != data.n_missing() {
            return Err(Error::Dimension {
                what: "fill entries vs missing cells",
                expected: data.n_missing(),
                got: map.len(),
            });
        }
        let values = data
            .missing_cells()
            .iter()
            .map(|cell| {
                map.get(cell)
                    .copied()
                    .ok_or_else(|| Error::Dataset(format!("fill has no value for missing cell {cell:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, data: &Dataset, i: usize, j: usize) -> Option<f64> {
        let range = data.row_missing_range(i);
        data.missing_cells()[range.clone()]
            .iter()
            .position(|&(_, c)| c == j)
            .map(|k| self.values[range.start + k])
    }
}

// ---------------------------------------------------------------------------
// Transforms and parameter vectors

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Identity,
    Log,
    Logit,
}

impl Transform {
    pub fn to_unconstrained(self, c: f64) -> f64 {
        match self {
            Transform::Identity => c,
            Transform::Log => c.ln(),
            Transform::Logit => c.ln() - (-c).ln_1p(),
        }
    }

    pub fn to_constrained(self, u: f64) -> f64 {
        match self {
            Transform::Identity => u,
            Transform::Log => u.exp(),
            Transform::Logit => sigmoid(u),
        }
    }

    /// `ln |d to_constrained / du|`.
    pub fn log_abs_jacobian(self, u: f64) -> f64 {
        match self {
            Transform::Identity => 0.0,
            Transform::Log => u,
            Transform::Logit => -softplus(-u) - softplus(u),
        }
    }

    pub fn in_domain(self, c: f64) -> bool {
        match self {
            Transform::Identity => c.is_finite(),
            Transform::Log => c > 0.0 && c.is_finite(),
            Transform::Logit => c > 0.0 && c < 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Alpha,
    Beta,
    Phi,
}

/// Constrained-scale parameter blocks. Concatenated order is alpha, beta, phi,
/// and `transforms` follows that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub phi: Vec<f64>,
    pub transforms: Vec<Transform>,
}

impl ParamVector {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, phi: Vec<f64>, transforms: Vec<Transform>) -> Result<Self> {
        let len = alpha.len() + beta.len() + phi.len();
        if transforms.len() != len {
            return Err(Error::Dimension {
                what: "transforms vs parameters",
                expected: len,
                got: transforms.len(),
            });
        }
        Ok(Self {
            alpha,
            beta,
            phi,
            transforms,
        })
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.phi);
        v
    }

    /// Same block sizes and transforms, new concatenated constrained values.
    pub fn with_values(&self, values: &[f64]) -> Self {
        assert_eq!(values.len(), self.len(), "parameter length");
        let (a, rest) = values.split_at(self.alpha.len());
        let (b, p) = rest.split_at(self.beta.len());
        Self {
            alpha: a.to_vec(),
            beta: b.to_vec(),
            phi: p.to_vec(),
            transforms: self.transforms.clone(),
        }
    }

    pub fn to_unconstrained(&self) -> Vec<f64> {
        self.values()
            .iter()
            .zip(&self.transforms)
            .map(|(c, t)| t.to_unconstrained(*c))
            .collect()
    }

    pub fn from_unconstrained(&self, u: &[f64]) -> Self {
        let c: Vec<f64> = u
            .iter()
            .zip(&self.transforms)
            .map(|(u, t)| t.to_constrained(*u))
            .collect();
        self.with_values(&c)
    }
}

/// Sum of per-coordinate log Jacobian terms of the unconstrained-to-constrained map.
pub fn log_jacobian(unconstrained: &[f64], transforms: &[Transform]) -> f64 {
    unconstrained
        .iter()
        .zip(transforms)
        .map(|(u, t)| t.log_abs_jacobian(*u))
        .sum()
}

// ---------------------------------------------------------------------------
// Model specification

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub block: Block,
    pub transform: Transform,
    pub prior: DistributionSpec,
}

/// A family whose parameters are affine expressions.
///
/// What the expression parameters index depends on where this is used: the
/// alpha block for covariate models, the full concatenated parameter vector
/// for importance proposals.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub family: Family,
    pub params: Vec<Affine>,
}

impl Conditional {
    pub fn new(family: Family, params: Vec<Affine>) -> Result<Self> {
        if params.len() != family.arity() {
            return Err(Error::Arity {
                family,
                expected: family.arity(),
                got: params.len(),
            });
        }
        Ok(Self { family, params })
    }

    pub fn fixed(spec: &DistributionSpec) -> Self {
        Self {
            family: spec.family,
            params: spec.params.iter().map(|v| Affine::constant(*v)).collect(),
        }
    }

    #[inline]
    pub fn eval_params(&self, params: &[f64], row: &[f64], y: f64, out: &mut [f64; 3]) -> usize {
        for (o, e) in out.iter_mut().zip(&self.params) {
            *o = e.eval(params, row, y);
        }
        self.params.len()
    }

    #[inline]
    pub fn log_density(&self, params: &[f64], row: &[f64], y: f64, x: f64) -> f64 {
        let mut buf = [0.0; 3];
        let k = self.eval_params(params, row, y, &mut buf);
        self.family.log_density(&buf[..k], x)
    }
}

/// Covariate model and importance proposal for one column with missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateEntry {
    pub column: usize,
    /// `f_j(x_j | x_1..x_{j-1}, alpha)`; expression params index the alpha block.
    pub model: Conditional,
    /// `q_IS` for this column; expression params index the full parameter vector.
    pub proposal: Conditional,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    /// The inclusion mask is not modelled; contributes zero.
    Ignorable,
    /// `P(m_ij = 1) = IL(logit)` for every cell of the governed columns.
    /// Expression params index the phi block. A logit with no column terms
    /// is the MCAR special case.
    Logistic { columns: Vec<usize>, logit: Affine },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub intercept: bool,
    pub columns: Vec<usize>,
}

impl Design {
    pub fn len(&self) -> usize {
        self.columns.len() + usize::from(self.intercept)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn linear_predictor(&self, row: &[f64], beta: &[f64]) -> f64 {
        let (mut eta, coefs) = if self.intercept {
            (beta[0], &beta[1..])
        } else {
            (0.0, beta)
        };
        for (b, &j) in coefs.iter().zip(&self.columns) {
            eta += b * row[j];
        }
        eta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub params: Vec<Parameter>,
    pub design: Design,
    /// Sorted by column.
    pub covariates: Vec<CovariateEntry>,
    pub mechanism: Mechanism,
    n_cols: usize,
    entry_for_column: Vec<Option<usize>>,
    n_alpha: usize,
    n_beta: usize,
}

impl ModelSpec {
    pub fn new(
        params: Vec<Parameter>,
        design: Design,
        mut covariates: Vec<CovariateEntry>,
        mechanism: Mechanism,
        n_cols: usize,
    ) -> Result<Self> {
        let order = |b: Block| match b {
            Block::Alpha => 0,
            Block::Beta => 1,
            Block::Phi => 2,
        };
        if params.windows(2).any(|w| order(w[0].block) > order(w[1].block)) {
            return Err(Error::Model("parameters must be ordered alpha, beta, phi".into()));
        }
        let count = |b: Block| params.iter().filter(|p| p.block == b).count();
        let (n_alpha, n_beta, n_phi) = (count(Block::Alpha), count(Block::Beta), count(Block::Phi));
        for p in &params {
            if p.transform == Transform::Identity
                && matches!(p.prior.family, Family::InverseGamma | Family::LogNormal | Family::Beta)
            {
                return Err(Error::Model(format!(
                    "parameter `{}` has a {} prior but an identity transform",
                    p.name, p.prior.family
                )));
            }
        }
        if design.len() != n_beta {
            return Err(Error::Dimension {
                what: "beta parameters vs design columns",
                expected: design.len(),
                got: n_beta,
            });
        }
        if let Some(&j) = design.columns.iter().find(|&&j| j >= n_cols) {
            return Err(Error::Model(format!("design column {j} out of range")));
        }
        covariates.sort_by_key(|c| c.column);
        let mut entry_for_column = vec![None; n_cols];
        for (k, entry) in covariates.iter().enumerate() {
            let j = entry.column;
            if j >= n_cols {
                return Err(Error::Model(format!("covariate model for column {j} out of range")));
            }
            if entry_for_column[j].replace(k).is_some() {
                return Err(Error::Model(format!("column {j} has two covariate models")));
            }
            for (what, cond, limit) in [
                ("covariate model", &entry.model, n_alpha),
                ("importance proposal", &entry.proposal, params.len()),
            ] {
                if cond.params.len() != cond.family.arity() {
                    return Err(Error::Arity {
                        family: cond.family,
                        expected: cond.family.arity(),
                        got: cond.params.len(),
                    });
                }
                for e in &cond.params {
                    if let Some(c) = e.columns().find(|&c| c >= j) {
                        return Err(Error::Model(format!(
                            "{what} for column {j} depends on column {c}; only earlier columns are allowed"
                        )));
                    }
                    if e.params().any(|p| p >= limit) {
                        return Err(Error::Model(format!(
                            "{what} for column {j} references an invalid parameter"
                        )));
                    }
                }
            }
            if entry.model.params.iter().any(|e| e.uses_response()) {
                return Err(Error::Model(format!(
                    "covariate model for column {j} may not depend on the response"
                )));
            }
        }
        if let Mechanism::Logistic { columns, logit } = &mechanism {
            if let Some(&c) = columns
                .iter()
                .chain(logit.columns().collect::<Vec<_>>().iter())
                .find(|&&c| c >= n_cols)
            {
                return Err(Error::Model(format!("mechanism references undeclared column {c}")));
            }
            if logit.params().any(|p| p >= n_phi) {
                return Err(Error::Model(
                    "mechanism references a parameter outside the phi block".into(),
                ));
            }
        }
        Ok(Self {
            params,
            design,
            covariates,
            mechanism,
            n_cols,
            entry_for_column,
            n_alpha,
            n_beta,
        })
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn block_sizes(&self) -> (usize, usize, usize) {
        (
            self.n_alpha,
            self.n_beta,
            self.params.len() - self.n_alpha - self.n_beta,
        )
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn transforms(&self) -> Vec<Transform> {
        self.params.iter().map(|p| p.transform).collect()
    }

    pub fn entry_for_column(&self, j: usize) -> Option<&CovariateEntry> {
        self.entry_for_column
            .get(j)
            .copied()
            .flatten()
            .map(|k| &self.covariates[k])
    }

    /// Splits a concatenated constrained vector into a `ParamVector`.
    pub fn param_vector(&self, values: &[f64]) -> Result<ParamVector> {
        if values.len() != self.params.len() {
            return Err(Error::Dimension {
                what: "parameter values",
                expected: self.params.len(),
                got: values.len(),
            });
        }
        let (a, rest) = values.split_at(self.n_alpha);
        let (b, p) = rest.split_at(self.n_beta);
        ParamVector::new(a.to_vec(), b.to_vec(), p.to_vec(), self.transforms())
    }

    /// Checks that the model covers every missing cell of `data`.
    pub fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.n_cols() != self.n_cols {
            return Err(Error::Dimension {
                what: "dataset columns vs model columns",
                expected: self.n_cols,
                got: data.n_cols(),
            });
        }
        for j in 0..data.n_cols() {
            if data.column_missing_fraction(j) > 0.0 && self.entry_for_column(j).is_none() {
                return Err(Error::Model(format!(
                    "column `{}` has missing cells but no covariate model",
                    data.column_names()[j]
                )));
            }
        }
        Ok(())
    }

    fn check_fill(&self, data: &Dataset, fill: &MissingFill) -> Result<()> {
        if fill.values().len() != data.n_missing() {
            return Err(Error::Dimension {
                what: "fill values vs missing cells",
                expected: data.n_missing(),
                got: fill.values().len(),
            });
        }
        Ok(())
    }

    // -- row kernels ---------------------------------------------------------

    /// `y·η − ln(1 + e^η)` for one completed row.
    #[inline]
    pub fn row_cond_loglik(&self, row: &[f64], y: f64, beta: &[f64]) -> f64 {
        let eta = self.design.linear_predictor(row, beta);
        y * eta - softplus(eta)
    }

    /// Sum of `ln f_j` over the missing cells of row `i`.
    #[inline]
    pub fn row_covariate(&self, data: &Dataset, i: usize, row: &[f64], alpha: &[f64]) -> f64 {
        let y = data.y()[i];
        let mut acc = 0.0;
        for &(_, j) in &data.missing_cells()[data.row_missing_range(i)] {
            let entry = self.entry_for_column(j).expect("checked by check_data");
            acc += entry.model.log_density(alpha, row, y, row[j]);
        }
        acc
    }

    #[inline]
    pub fn row_mechanism(&self, data: &Dataset, i: usize, row: &[f64], phi: &[f64]) -> f64 {
        match &self.mechanism {
            Mechanism::Ignorable => 0.0,
            Mechanism::Logistic { columns, logit } => {
                let y = data.y()[i];
                let mut acc = 0.0;
                for &j in columns {
                    let eta = logit.eval(phi, row, y);
                    acc += if data.is_observed(i, j) {
                        -softplus(-eta)
                    } else {
                        -softplus(eta)
                    };
                }
                acc
            }
        }
    }

    // -- whole-dataset log densities ------------------------------------------

    pub fn log_cond_likelihood(&self, data: &Dataset, fill: &MissingFill, beta: &[f64]) -> Result<f64> {
        if beta.len() != self.design.len() {
            return Err(Error::Dimension {
                what: "beta vs design columns",
                expected: self.design.len(),
                got: beta.len(),
            });
        }
        self.check_fill(data, fill)?;
        let mut row = vec![0.0; data.n_cols()];
        Ok((0..data.n_rows())
            .map(|i| {
                data.complete_row(i, fill.values(), &mut row);
                self.row_cond_loglik(&row, data.y()[i], beta)
            })
            .sum())
    }

    pub fn log_covariate_model(&self, data: &Dataset, fill: &MissingFill, alpha: &[f64]) -> Result<f64> {
        self.check_data(data)?;
        self.check_fill(data, fill)?;
        if alpha.len() != self.n_alpha {
            return Err(Error::Dimension {
                what: "alpha",
                expected: self.n_alpha,
                got: alpha.len(),
            });
        }
        let mut row = vec![0.0; data.n_cols()];
        Ok((0..data.n_rows())
            .filter(|&i| data.row_has_missing(i))
            .map(|i| {
                data.complete_row(i, fill.values(), &mut row);
                self.row_covariate(data, i, &row, alpha)
            })
            .sum())
    }

    pub fn log_mechanism(&self, data: &Dataset, fill: &MissingFill, phi: &[f64]) -> Result<f64> {
        self.check_fill(data, fill)?;
        let n_phi = self.params.len() - self.n_alpha - self.n_beta;
        if phi.len() != n_phi {
            return Err(Error::Dimension {
                what: "phi",
                expected: n_phi,
                got: phi.len(),
            });
        }
        if data.n_cols() != self.n_cols {
            return Err(Error::Model("mechanism references an undeclared column".into()));
        }
        let mut row = vec![0.0; data.n_cols()];
        Ok((0..data.n_rows())
            .map(|i| {
                data.complete_row(i, fill.values(), &mut row);
                self.row_mechanism(data, i, &row, phi)
            })
            .sum())
    }

    /// Independent priors on the constrained scale; `−∞` outside any
    /// coordinate's support or transform domain.
    pub fn log_prior(&self, theta: &ParamVector) -> f64 {
        let values = theta.values();
        if values.len() != self.params.len() {
            return f64::NEG_INFINITY;
        }
        let mut acc = 0.0;
        for (p, v) in self.params.iter().zip(values) {
            if !p.transform.in_domain(v) {
                return f64::NEG_INFINITY;
            }
            acc += p.prior.log_pdf(v);
        }
        acc
    }
}

// ---------------------------------------------------------------------------

/// `ln(1 + eˣ)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Operand;

    fn normal_prior() -> DistributionSpec {
        DistributionSpec::normal(0.0, 3.0).unwrap()
    }

    fn beta_param(name: &str) -> Parameter {
        Parameter {
            name: name.into(),
            block: Block::Beta,
            transform: Transform::Identity,
            prior: normal_prior(),
        }
    }

    /// Intercept plus one column, no missing data, no mechanism.
    fn simple_spec(n_cols: usize) -> ModelSpec {
        ModelSpec::new(
            vec![beta_param("b0"), beta_param("b1")],
            Design {
                intercept: true,
                columns: vec![0],
            },
            vec![],
            Mechanism::Ignorable,
            n_cols,
        )
        .unwrap()
    }

    fn complete_data(y: &[f64], x: &[f64]) -> Dataset {
        Dataset::new(y.to_vec(), x.iter().map(|v| vec![Some(*v)]).collect(), vec!["x".into()]).unwrap()
    }

    #[test]
    fn zero_beta_gives_half_probabilities() {
        let data = complete_data(&[1.0, 0.0, 1.0, 1.0], &[0.3, -2.0, 5.0, 1.0]);
        let spec = simple_spec(1);
        let ll = spec
            .log_cond_likelihood(&data, &MissingFill::empty(), &[0.0, 0.0])
            .unwrap();
        assert!((ll - 4.0 * 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn single_row_closed_form() {
        let data = complete_data(&[1.0], &[0.0]);
        let spec = simple_spec(1);
        for b in [0.0, 1.3, -4.0, 40.0, -40.0] {
            let ll = spec
                .log_cond_likelihood(&data, &MissingFill::empty(), &[b, 0.0])
                .unwrap();
            let expect = b - (1.0 + b.exp()).ln();
            assert!((ll - expect).abs() < 1e-12, "b={b}: {ll} vs {expect}");
        }
    }

    #[test]
    fn extreme_predictors_stay_finite() {
        let data = complete_data(&[1.0, 0.0], &[1e3, 1e3]);
        let spec = simple_spec(1);
        let ll = spec
            .log_cond_likelihood(&data, &MissingFill::empty(), &[0.0, 10.0])
            .unwrap();
        assert!(ll.is_finite());
        assert!((ll + 1e4).abs() < 1e-6);
    }

    #[test]
    fn beta_dimension_mismatch() {
        let data = complete_data(&[1.0], &[0.0]);
        assert!(simple_spec(1)
            .log_cond_likelihood(&data, &MissingFill::empty(), &[0.0])
            .is_err());
    }

    #[test]
    fn mcar_single_cell() {
        let data = Dataset::new(vec![1.0], vec![vec![Some(2.0)]], vec!["x".into()]).unwrap();
        let spec = ModelSpec::new(
            vec![beta_param("b0")],
            Design {
                intercept: true,
                columns: vec![],
            },
            vec![],
            Mechanism::Logistic {
                columns: vec![0],
                logit: Affine::constant(0.0),
            },
            1,
        )
        .unwrap();
        let lm = spec.log_mechanism(&data, &MissingFill::empty(), &[]).unwrap();
        assert!((lm - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mechanism_rejects_undeclared_column() {
        let res = ModelSpec::new(
            vec![beta_param("b0")],
            Design {
                intercept: true,
                columns: vec![],
            },
            vec![],
            Mechanism::Logistic {
                columns: vec![0],
                logit: Affine::constant(0.0).with_term(1.0, None, Some(Operand::Column(3))),
            },
            1,
        );
        assert!(res.is_err());
    }

    #[test]
    fn covariate_model_must_be_triangular() {
        let entry = CovariateEntry {
            column: 0,
            model: Conditional::new(
                Family::Normal,
                vec![
                    Affine::constant(0.0).with_term(1.0, None, Some(Operand::Column(1))),
                    Affine::constant(1.0),
                ],
            )
            .unwrap(),
            proposal: Conditional::fixed(&DistributionSpec::normal(0.0, 1.0).unwrap()),
        };
        let res = ModelSpec::new(
            vec![beta_param("b0")],
            Design {
                intercept: true,
                columns: vec![],
            },
            vec![entry],
            Mechanism::Ignorable,
            2,
        );
        assert!(matches!(res, Err(Error::Model(_))));
    }

    #[test]
    fn missing_column_without_model_is_an_error() {
        let data = Dataset::new(vec![1.0], vec![vec![None]], vec!["x".into()]).unwrap();
        let spec = simple_spec(1);
        let fill = MissingFill::new(&data, vec![0.5]).unwrap();
        assert!(spec.log_covariate_model(&data, &fill, &[]).is_err());
    }

    #[test]
    fn no_missing_cells_gives_zero_covariate_term() {
        let data = complete_data(&[1.0, 0.0], &[1.0, 2.0]);
        let lc = simple_spec(1)
            .log_covariate_model(&data, &MissingFill::empty(), &[])
            .unwrap();
        assert_eq!(lc, 0.0);
    }

    #[test]
    fn prior_support() {
        let spec = ModelSpec::new(
            vec![
                Parameter {
                    name: "alpha".into(),
                    block: Block::Alpha,
                    transform: Transform::Log,
                    prior: DistributionSpec::new(Family::InverseGamma, vec![1.65, 0.65]).unwrap(),
                },
                beta_param("b0"),
            ],
            Design {
                intercept: true,
                columns: vec![],
            },
            vec![],
            Mechanism::Ignorable,
            0,
        )
        .unwrap();
        let theta = spec.param_vector(&[-0.2, 0.0]).unwrap();
        assert_eq!(spec.log_prior(&theta), f64::NEG_INFINITY);
        let theta = spec.param_vector(&[1.0, 0.0]).unwrap();
        assert!(spec.log_prior(&theta).is_finite());
    }

    #[test]
    fn jacobian_terms() {
        assert_eq!(log_jacobian(&[1.0, -2.0], &[Transform::Identity; 2]), 0.0);
        assert_eq!(log_jacobian(&[0.7], &[Transform::Log]), 0.7);
        let u = 0.3;
        let s = sigmoid(u);
        let lj = log_jacobian(&[u], &[Transform::Logit]);
        assert!((lj - (s.ln() + (1.0 - s).ln())).abs() < 1e-14);
    }

    #[test]
    fn fill_from_map_requires_exact_keys() {
        let data = Dataset::new(
            vec![1.0, 0.0],
            vec![vec![None, Some(1.0)], vec![Some(2.0), None]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let mut map = HashMap::new();
        map.insert((0, 0), 5.0);
        assert!(MissingFill::from_map(&data, &map).is_err());
        map.insert((1, 1), 6.0);
        let fill = MissingFill::from_map(&data, &map).unwrap();
        assert_eq!(fill.get(&data, 1, 1), Some(6.0));
        assert_eq!(fill.get(&data, 0, 1), None);
        map.remove(&(1, 1));
        map.insert((0, 1), 6.0);
        assert!(MissingFill::from_map(&data, &map).is_err());
    }

    #[test]
    fn rejects_non_binary_response() {
        assert!(Dataset::new(vec![2.0], vec![vec![Some(1.0)]], vec!["a".into()]).is_err());
    }
}
