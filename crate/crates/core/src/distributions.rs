//! Log densities and samplers for the families used by covariate models,
//! priors and importance proposals.
//!
//! Parameter conventions (these are the orderings used in configuration files):
//!
//! | family              | params                         |
//! |---------------------|--------------------------------|
//! | `normal`            | mean, variance                 |
//! | `log_normal`        | mean of log, variance of log   |
//! | `skew_normal`       | location ξ, scale ω, shape α   |
//! | `scaled_t`          | degrees of freedom, location, scale |
//! | `inverse_gamma`     | shape, scale                   |
//! | `beta`              | α, β                           |
//! | `bernoulli`         | p                              |
//! | `negative_binomial` | n (real, > 0), p               |
//!
//! `scaled_t(ν, m, s)` is `m + s·T` with `T` a standard Student t on ν degrees
//! of freedom. The negative binomial mass is
//! `Γ(x+n) / (Γ(n)·x!) · pⁿ (1−p)ˣ` on the non-negative integers.
//!
//! Densities are only exposed in log form. Points outside the support give
//! `f64::NEG_INFINITY`.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    LogNormal,
    SkewNormal,
    ScaledT,
    InverseGamma,
    Beta,
    Bernoulli,
    NegativeBinomial,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Normal,
        Family::LogNormal,
        Family::SkewNormal,
        Family::ScaledT,
        Family::InverseGamma,
        Family::Beta,
        Family::Bernoulli,
        Family::NegativeBinomial,
    ];

    pub fn arity(self) -> usize {
        match self {
            Family::Bernoulli => 1,
            Family::Normal | Family::LogNormal | Family::InverseGamma | Family::Beta | Family::NegativeBinomial => 2,
            Family::SkewNormal | Family::ScaledT => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::LogNormal => "log_normal",
            Family::SkewNormal => "skew_normal",
            Family::ScaledT => "scaled_t",
            Family::InverseGamma => "inverse_gamma",
            Family::Beta => "beta",
            Family::Bernoulli => "bernoulli",
            Family::NegativeBinomial => "negative_binomial",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, Family::Bernoulli | Family::NegativeBinomial)
    }

    /// Checks parameter values, returning the reason they are rejected.
    pub fn check(self, params: &[f64]) -> std::result::Result<(), &'static str> {
        if params.iter().any(|v| !v.is_finite()) {
            return Err("parameters must be finite");
        }
        let positive = |v: f64, what| if v > 0.0 { Ok(()) } else { Err(what) };
        match self {
            Family::Normal | Family::LogNormal => positive(params[1], "variance must be > 0"),
            Family::SkewNormal => positive(params[1], "scale must be > 0"),
            Family::ScaledT => {
                positive(params[0], "degrees of freedom must be > 0")?;
                positive(params[2], "scale must be > 0")
            }
            Family::InverseGamma => {
                positive(params[0], "shape must be > 0")?;
                positive(params[1], "scale must be > 0")
            }
            Family::Beta => {
                positive(params[0], "alpha must be > 0")?;
                positive(params[1], "beta must be > 0")
            }
            Family::Bernoulli => {
                if (0.0..=1.0).contains(&params[0]) {
                    Ok(())
                } else {
                    Err("p must lie in [0, 1]")
                }
            }
            Family::NegativeBinomial => {
                positive(params[0], "n must be > 0")?;
                if params[1] > 0.0 && params[1] < 1.0 {
                    Ok(())
                } else {
                    Err("p must lie in (0, 1)")
                }
            }
        }
    }

    fn valid(self, params: &[f64]) -> bool {
        params.len() == self.arity() && self.check(params).is_ok()
    }

    /// Log density (or mass) with unvalidated parameters.
    ///
    /// Invalid parameters give `NEG_INFINITY`, which is what model code wants
    /// when a parameter expression wanders outside a family's domain.
    pub fn log_density(self, params: &[f64], x: f64) -> f64 {
        if !self.valid(params) || x.is_nan() {
            return f64::NEG_INFINITY;
        }
        let lp = match self {
            Family::Normal => normal_ln(x, params[0], params[1]),
            Family::LogNormal => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                normal_ln(x.ln(), params[0], params[1]) - x.ln()
            }
            Family::SkewNormal => {
                let (loc, scale, shape) = (params[0], params[1], params[2]);
                let z = (x - loc) / scale;
                LN_2 - scale.ln() - 0.5 * z * z - LN_SQRT_2PI + ln_std_normal_cdf(shape * z)
            }
            Family::ScaledT => {
                let (df, loc, scale) = (params[0], params[1], params[2]);
                let z = (x - loc) / scale;
                ln_gamma(0.5 * (df + 1.0))
                    - ln_gamma(0.5 * df)
                    - 0.5 * (df * PI).ln()
                    - scale.ln()
                    - 0.5 * (df + 1.0) * (z * z / df).ln_1p()
            }
            Family::InverseGamma => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let (shape, scale) = (params[0], params[1]);
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
            }
            Family::Beta => {
                if x <= 0.0 || x >= 1.0 {
                    return f64::NEG_INFINITY;
                }
                let (a, b) = (params[0], params[1]);
                (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_gamma(a) - ln_gamma(b) + ln_gamma(a + b)
            }
            Family::Bernoulli => {
                let p = params[0];
                if x == 1.0 {
                    p.ln()
                } else if x == 0.0 {
                    (-p).ln_1p()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::NegativeBinomial => {
                if x < 0.0 || x.fract() != 0.0 || x.is_infinite() {
                    return f64::NEG_INFINITY;
                }
                let (n, p) = (params[0], params[1]);
                ln_gamma(x + n) - ln_gamma(n) - ln_gamma(x + 1.0) + n * p.ln() + x * (-p).ln_1p()
            }
        };
        if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp
        }
    }

    /// Draws one value; `None` if the parameters are invalid.
    pub fn draw<R: Rng + ?Sized>(self, params: &[f64], rng: &mut R) -> Option<f64> {
        if !self.valid(params) {
            return None;
        }
        let x = match self {
            Family::Normal => params[0] + params[1].sqrt() * std_normal(rng),
            Family::LogNormal => (params[0] + params[1].sqrt() * std_normal(rng)).exp(),
            Family::SkewNormal => {
                // Conditioning representation: keep the sign of u1 tied to u0.
                let (loc, scale, shape) = (params[0], params[1], params[2]);
                let delta = shape / (1.0 + shape * shape).sqrt();
                let u0 = std_normal(rng);
                let v = std_normal(rng);
                let u1 = delta * u0 + (1.0 - delta * delta).sqrt() * v;
                let z = if u0 >= 0.0 { u1 } else { -u1 };
                loc + scale * z
            }
            Family::ScaledT => {
                let t: f64 = StudentT::new(params[0]).ok()?.sample(rng);
                params[1] + params[2] * t
            }
            Family::InverseGamma => {
                let g: f64 = Gamma::new(params[0], 1.0).ok()?.sample(rng);
                params[1] / g
            }
            Family::Beta => rand_distr::Beta::new(params[0], params[1]).ok()?.sample(rng),
            Family::Bernoulli => {
                let u: f64 = rng.random();
                if u < params[0] {
                    1.0
                } else {
                    0.0
                }
            }
            Family::NegativeBinomial => {
                let (n, p) = (params[0], params[1]);
                let lambda: f64 = Gamma::new(n, (1.0 - p) / p).ok()?.sample(rng);
                if lambda <= 0.0 {
                    0.0
                } else {
                    match Poisson::new(lambda) {
                        Ok(pois) => pois.sample(rng),
                        // beyond the Poisson sampler's range the count is
                        // indistinguishable from its mean
                        Err(_) => lambda.round(),
                    }
                }
            }
        };
        Some(x)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        let family = match key.as_str() {
            "normal" | "gaussian" => Family::Normal,
            "lognormal" => Family::LogNormal,
            "skewnormal" => Family::SkewNormal,
            "scaledt" | "t" | "studentt" => Family::ScaledT,
            "inversegamma" | "invgamma" => Family::InverseGamma,
            "beta" => Family::Beta,
            "bernoulli" => Family::Bernoulli,
            "negativebinomial" | "negbinomial" | "nbinom" => Family::NegativeBinomial,
            _ => return Err(Error::UnknownFamily(s.to_string())),
        };
        Ok(family)
    }
}

/// A family with validated, fixed parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct DistributionSpec {
    pub family: Family,
    pub params: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    family: Family,
    params: Vec<f64>,
}

impl TryFrom<RawSpec> for DistributionSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        DistributionSpec::new(raw.family, raw.params)
    }
}

impl DistributionSpec {
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self> {
        if params.len() != family.arity() {
            return Err(Error::Arity {
                family,
                expected: family.arity(),
                got: params.len(),
            });
        }
        family.check(&params).map_err(|reason| Error::InvalidParams {
            family,
            params: params.clone(),
            reason,
        })?;
        Ok(Self { family, params })
    }

    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        Self::new(Family::Normal, vec![mean, variance])
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        self.family.log_density(&self.params, x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.family
            .draw(&self.params, rng)
            .expect("parameters validated at construction")
    }
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_ln(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * PI * variance).ln() - 0.5 * d * d / variance
}

/// `ln Φ(z)`, accurate in both tails.
pub fn ln_std_normal_cdf(z: f64) -> f64 {
    if z > 0.0 {
        (-0.5 * erfc(z / std::f64::consts::SQRT_2)).ln_1p()
    } else if z > -30.0 {
        (0.5 * erfc(-z / std::f64::consts::SQRT_2)).ln()
    } else {
        // Mills-ratio asymptotic series; erfc underflows out here.
        let z2 = z * z;
        -0.5 * z2 - LN_SQRT_2PI - (-z).ln() + (-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2)).ln_1p()
    }
}
