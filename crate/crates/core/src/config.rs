//! Run configuration: one TOML file describes data roles, parameters with
//! their priors and transforms, covariate models, importance proposals, the
//! missingness mechanism, sampler settings and (optionally) a simulation
//! recipe.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::expr::{Affine, Operand, Symbol};
use crate::model::{
    Block, Conditional, CovariateEntry, Design, Mechanism, ModelSpec, ParamVector, Parameter, Transform,
};
use crate::sampler::{draw_init, ProposalSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub parameters: Vec<ParamConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub covariates: Vec<CovariateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanism: Option<MechanismConfig>,
    pub sampler: SamplerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file, relative paths resolved against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub response: String,
    /// Covariate columns in sequential-model order: a column's covariate model
    /// may only depend on columns listed before it.
    pub columns: Vec<String>,
    #[serde(default = "default_true")]
    pub intercept: bool,
    /// Regression columns (after the intercept, if any). Columns listed in
    /// `columns` but not here are auxiliary.
    pub design: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamConfig {
    pub name: String,
    pub block: Block,
    #[serde(default)]
    pub transform: Transform,
    pub prior: DistributionSpec,
    /// Random-walk step on the unconstrained scale.
    pub step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<f64>,
}

/// A number or an affine expression such as `"alpha + 0.5*x1"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for ExprValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprValue::Number(v) => write!(f, "{v}"),
            ExprValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalConfig {
    pub family: Family,
    pub params: Vec<ExprValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateConfig {
    pub column: String,
    pub model: ConditionalConfig,
    pub proposal: ConditionalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    /// Columns whose inclusion indicators the mechanism models.
    pub columns: Vec<String>,
    /// Log-odds of a cell being observed; a constant or phi-only expression
    /// is missing completely at random.
    pub logit: ExprValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_importance: usize,
    pub iterations: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: u64,
    /// 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_rhat_threshold")]
    pub rhat_threshold: f64,
    /// Dense random-walk covariance; overrides the per-parameter steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal_covariance: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub rows: usize,
    /// Data-generating parameter values by name.
    pub truth: BTreeMap<String, f64>,
    /// Generators for columns without a covariate model (or to override it).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<GeneratorConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub column: String,
    pub family: Family,
    pub params: Vec<ExprValue>,
}

fn default_true() -> bool {
    true
}

fn default_rhat_threshold() -> f64 {
    1.1
}

/// What names an expression may refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Scope {
    /// Alpha parameters (block-local indices) and earlier columns.
    CovariateModel,
    /// Any parameter (global indices), columns and the response.
    Global,
    /// Phi parameters (block-local indices), columns and the response.
    Mechanism,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|source| Error::Toml {
            path: PathBuf::from("<string>"),
            source,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|source| Error::Toml {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    fn column_index(&self, name: &str) -> Result<usize> {
        self.data
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Config(format!("unknown column `{name}`")))
    }

    fn param_blocks(&self) -> Vec<(String, Block)> {
        self.parameters.iter().map(|p| (p.name.clone(), p.block)).collect()
    }

    pub(crate) fn resolver(&self, scope: Scope) -> impl Fn(&str) -> Option<Symbol> + '_ {
        let blocks = self.param_blocks();
        let n_alpha = blocks.iter().filter(|(_, b)| *b == Block::Alpha).count();
        let n_beta = blocks.iter().filter(|(_, b)| *b == Block::Beta).count();
        move |name: &str| {
            if let Some(g) = blocks.iter().position(|(n, _)| n == name) {
                let block = blocks[g].1;
                return match (scope, block) {
                    (Scope::Global, _) => Some(Symbol::Param(g)),
                    (Scope::CovariateModel, Block::Alpha) => Some(Symbol::Param(g)),
                    (Scope::Mechanism, Block::Phi) => Some(Symbol::Param(g - n_alpha - n_beta)),
                    _ => None,
                };
            }
            if let Some(j) = self.data.columns.iter().position(|c| c == name) {
                return Some(Symbol::Operand(Operand::Column(j)));
            }
            if name == self.data.response && scope != Scope::CovariateModel {
                return Some(Symbol::Operand(Operand::Response));
            }
            None
        }
    }

    pub(crate) fn parse_expr(&self, value: &ExprValue, scope: Scope) -> Result<Affine> {
        match value {
            ExprValue::Number(v) => Ok(Affine::constant(*v)),
            ExprValue::Text(s) => Affine::parse(s, self.resolver(scope)),
        }
    }

    pub(crate) fn conditional(&self, family: Family, params: &[ExprValue], scope: Scope) -> Result<Conditional> {
        let exprs = params
            .iter()
            .map(|p| self.parse_expr(p, scope))
            .collect::<Result<Vec<_>>>()?;
        Conditional::new(family, exprs)
    }

    /// Builds the model, checking names, arities and the triangular ordering.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let mut seen = std::collections::HashSet::new();
        for p in &self.parameters {
            if !seen.insert(p.name.as_str()) {
                return Err(Error::Config(format!("parameter `{}` declared twice", p.name)));
            }
            if self.data.columns.contains(&p.name) || p.name == self.data.response {
                return Err(Error::Config(format!("parameter `{}` shadows a column", p.name)));
            }
        }
        let params = self
            .parameters
            .iter()
            .map(|p| Parameter {
                name: p.name.clone(),
                block: p.block,
                transform: p.transform,
                prior: p.prior.clone(),
            })
            .collect();
        let design = Design {
            intercept: self.data.intercept,
            columns: self
                .data
                .design
                .iter()
                .map(|c| self.column_index(c))
                .collect::<Result<_>>()?,
        };
        let covariates = self
            .covariates
            .iter()
            .map(|c| {
                Ok(CovariateEntry {
                    column: self.column_index(&c.column)?,
                    model: self.conditional(c.model.family, &c.model.params, Scope::CovariateModel)?,
                    proposal: self.conditional(c.proposal.family, &c.proposal.params, Scope::Global)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mechanism = match &self.mechanism {
            None => Mechanism::Ignorable,
            Some(m) => Mechanism::Logistic {
                columns: m.columns.iter().map(|c| self.column_index(c)).collect::<Result<_>>()?,
                logit: self.parse_expr(&m.logit, Scope::Mechanism)?,
            },
        };
        ModelSpec::new(params, design, covariates, mechanism, self.data.columns.len())
    }

    pub fn proposal(&self) -> Result<ProposalSpec> {
        match &self.sampler.proposal_covariance {
            Some(cov) => {
                if cov.len() != self.parameters.len() {
                    return Err(Error::Dimension {
                        what: "proposal covariance vs parameters",
                        expected: self.parameters.len(),
                        got: cov.len(),
                    });
                }
                ProposalSpec::dense(cov.clone())
            }
            None => ProposalSpec::diagonal(self.parameters.iter().map(|p| p.step).collect()),
        }
    }

    /// Initial state: prior draws, overridden by any `init` values given.
    pub fn initial_state(&self, spec: &ModelSpec, seed: u64) -> Result<ParamVector> {
        let given: Vec<Option<f64>> = self.parameters.iter().map(|p| p.init).collect();
        let mut values = if given.iter().all(Option::is_some) {
            given.iter().map(|v| v.unwrap()).collect()
        } else {
            draw_init(spec, seed)?.values()
        };
        for (v, g) in values.iter_mut().zip(&given) {
            if let Some(g) = g {
                *v = *g;
            }
        }
        spec.param_vector(&values)
    }

    /// Resolves the data path against `base_dir`.
    pub fn data_path(&self, base_dir: &Path) -> Result<PathBuf> {
        let p = self
            .data
            .path
            .as_ref()
            .ok_or_else(|| Error::Config("no data path configured".into()))?;
        Ok(if p.is_absolute() { p.clone() } else { base_dir.join(p) })
    }
}

/// A full parameter vector from a name → value table (e.g. a truth file).
pub fn theta_from_map(spec: &ModelSpec, values: &BTreeMap<String, f64>) -> Result<ParamVector> {
    let v = spec
        .params
        .iter()
        .map(|p| {
            values
                .get(&p.name)
                .copied()
                .ok_or_else(|| Error::Config(format!("no value for parameter `{}`", p.name)))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(extra) = values.keys().find(|k| spec.param_index(k).is_none()) {
        return Err(Error::Config(format!("unknown parameter `{extra}`")));
    }
    spec.param_vector(&v)
}

pub fn read_theta_file(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|source| Error::Toml {
        path: path.to_path_buf(),
        source,
    })
}
