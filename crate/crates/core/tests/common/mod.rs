#![allow(dead_code)]

use std::path::PathBuf;

use pmglm::{Dataset, ModelSpec, ParamVector, RunConfig};

pub const TOY_TOML: &str = r#"
[data]
response = "y"
columns = ["x1"]
design = ["x1"]

[[parameters]]
name = "p"
block = "alpha"
transform = "logit"
prior = { family = "beta", params = [2.0, 2.0] }
step = 0.8

[[parameters]]
name = "beta0"
block = "beta"
prior = { family = "normal", params = [0.0, 2.5] }
step = 0.9

[[parameters]]
name = "beta1"
block = "beta"
prior = { family = "normal", params = [0.0, 2.5] }
step = 1.2

[[parameters]]
name = "phi"
block = "phi"
prior = { family = "normal", params = [0.0, 3.0] }
step = 1.0

[[covariates]]
column = "x1"
model = { family = "bernoulli", params = ["p"] }
proposal = { family = "bernoulli", params = [0.5] }

[mechanism]
columns = ["x1"]
logit = "phi"

[sampler]
n_importance = 4
iterations = 1000
seed = 7
"#;

/// Toy truth point used with the frozen enumeration value below.
pub const TOY_THETA: [f64; 4] = [0.4, -0.3, 1.2, 0.5];
/// Log marginal likelihood of the toy data at `TOY_THETA`, by independent
/// enumeration in double precision.
pub const TOY_EXACT_LOGLIK: f64 = -8.790463515219047;

pub fn toy_config() -> RunConfig {
    RunConfig::from_toml_str(TOY_TOML).unwrap()
}

pub fn toy_dataset() -> Dataset {
    let y = vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let x = [Some(1.0), None, Some(0.0), None, Some(1.0), None];
    Dataset::new(y, x.iter().map(|v| vec![*v]).collect(), vec!["x1".into()]).unwrap()
}

pub fn toy() -> (Dataset, ModelSpec, ParamVector) {
    let spec = toy_config().model_spec().unwrap();
    let theta = spec.param_vector(&TOY_THETA).unwrap();
    (toy_dataset(), spec, theta)
}

pub const CONT_TOML: &str = r#"
[data]
response = "y"
columns = ["x1", "x2"]
design = ["x1", "x2"]

[[parameters]]
name = "alpha"
block = "alpha"
transform = "log"
prior = { family = "inverse_gamma", params = [1.65, 0.65] }
step = 0.3

[[parameters]]
name = "beta0"
block = "beta"
prior = { family = "normal", params = [0.0, 3.0] }
step = 0.3

[[parameters]]
name = "beta1"
block = "beta"
prior = { family = "normal", params = [0.0, 3.0] }
step = 0.3

[[parameters]]
name = "beta2"
block = "beta"
prior = { family = "normal", params = [0.0, 3.0] }
step = 0.3

[[parameters]]
name = "phi0"
block = "phi"
prior = { family = "normal", params = [0.0, 3.0] }
step = 0.3

[[parameters]]
name = "phi1"
block = "phi"
prior = { family = "normal", params = [0.0, 3.0] }
step = 0.3

[[parameters]]
name = "phi2"
block = "phi"
prior = { family = "normal", params = [0.0, 3.0] }
step = 0.3

[[covariates]]
column = "x2"
model = { family = "normal", params = [0.0, "alpha"] }
proposal = { family = "scaled_t", params = [10.0, 0.0, "alpha"] }

[mechanism]
columns = ["x2"]
logit = "phi0 + phi1*x1 + phi2*x2"

[sampler]
n_importance = 4
iterations = 100
seed = 3
"#;

/// Quadrature values of the log marginal likelihood of `cont_dataset`.
pub const CONT_EXACT: [([f64; 7], f64); 2] = [
    ([1.0, 1.0, -2.0, 3.0, 1.0, 1.0, 1.0], -14.706044298378282),
    ([2.0, 0.5, -1.0, 1.5, 0.2, -0.5, 0.8], -8.181162082865267),
];

pub fn cont_dataset() -> Dataset {
    let rows = [
        (1.0, 0.3, None),
        (0.0, -1.1, Some(0.7)),
        (1.0, 0.8, None),
        (0.0, 1.5, None),
        (1.0, -0.4, Some(-0.2)),
    ];
    Dataset::new(
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| vec![Some(r.1), r.2]).collect(),
        vec!["x1".into(), "x2".into()],
    )
    .unwrap()
}

pub fn cont() -> (Dataset, ModelSpec) {
    let spec = RunConfig::from_toml_str(CONT_TOML).unwrap().model_spec().unwrap();
    (cont_dataset(), spec)
}

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn simulation_config() -> RunConfig {
    RunConfig::from_path(configs_dir().join("simulation.toml")).unwrap()
}

/// `(mean, standard error)` of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
