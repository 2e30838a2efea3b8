//! Univariate input laws: sampling, distribution functions and Beta fitting.

use rand::Rng;
use rand_distr::{Distribution as _, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Bernoulli {
        p: f64,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Exponential {
        lambda: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// A Beta variable `Z` whose mass below `m` is respread uniformly on
    /// `[0, m]` and whose mass at or above `max` is respread uniformly on
    /// `[max, 1]`; values in `[m, max)` are kept.
    TruncatedBetaMixture {
        alpha: f64,
        beta: f64,
        m: f64,
        #[serde(rename = "M")]
        max: f64,
    },
    /// Point mass. Used to pin an input at a base value.
    Degenerate {
        value: f64,
    },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Bernoulli { p } => (0.0..=1.0).contains(&p),
            Distribution::Gaussian { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            Distribution::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            Distribution::Exponential { lambda } => lambda > 0.0 && lambda.is_finite(),
            Distribution::Beta { alpha, beta } => {
                alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()
            }
            Distribution::TruncatedBetaMixture {
                alpha,
                beta,
                m,
                max,
            } => {
                alpha > 0.0
                    && beta > 0.0
                    && alpha.is_finite()
                    && beta.is_finite()
                    && 0.0 <= m
                    && m < max
                    && max <= 1.0
            }
            Distribution::Degenerate { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid parameters for {self:?}")))
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match *self {
            Distribution::Degenerate { .. } => true,
            Distribution::Bernoulli { p } => p == 0.0 || p == 1.0,
            _ => false,
        }
    }

    /// `P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => {
                if t < 0.0 {
                    0.0
                } else if t < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Distribution::Gaussian { mu, sigma } => std_normal_cdf((t - mu) / sigma),
            Distribution::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
            Distribution::Exponential { lambda } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(-lambda * t).exp_m1()
                }
            }
            Distribution::Beta { alpha, beta } => beta_cdf(alpha, beta, t),
            Distribution::TruncatedBetaMixture {
                alpha,
                beta,
                m,
                max,
            } => {
                if t < 0.0 {
                    0.0
                } else if t < m {
                    beta_cdf(alpha, beta, m) * t / m
                } else if t < max {
                    beta_cdf(alpha, beta, t)
                } else if t < 1.0 {
                    let upper = beta_cdf(alpha, beta, max);
                    upper + (1.0 - upper) * (t - max) / (1.0 - max)
                } else {
                    1.0
                }
            }
            Distribution::Degenerate { value } => {
                if t < value {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => p,
            Distribution::Gaussian { mu, .. } => mu,
            Distribution::Uniform { a, b } => 0.5 * (a + b),
            Distribution::Exponential { lambda } => 1.0 / lambda,
            Distribution::Beta { alpha, beta } => alpha / (alpha + beta),
            Distribution::TruncatedBetaMixture {
                alpha,
                beta,
                m,
                max,
            } => {
                // E[Z 1{m <= Z < M}] = mean * P_{alpha+1,beta}(m <= Z < M)
                let mean = alpha / (alpha + beta);
                let below = beta_cdf(alpha, beta, m);
                let upper = beta_cdf(alpha, beta, max);
                let kept = mean * (beta_cdf(alpha + 1.0, beta, max) - beta_cdf(alpha + 1.0, beta, m));
                kept + below * 0.5 * m + (1.0 - upper) * 0.5 * (1.0 + max)
            }
            Distribution::Degenerate { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => p * (1.0 - p),
            Distribution::Gaussian { sigma, .. } => sigma * sigma,
            Distribution::Uniform { a, b } => (b - a).powi(2) / 12.0,
            Distribution::Exponential { lambda } => 1.0 / (lambda * lambda),
            Distribution::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
            Distribution::TruncatedBetaMixture {
                alpha,
                beta,
                m,
                max,
            } => {
                let s = alpha + beta;
                let second_raw = alpha * (alpha + 1.0) / (s * (s + 1.0));
                let kept2 = second_raw
                    * (beta_cdf(alpha + 2.0, beta, max) - beta_cdf(alpha + 2.0, beta, m));
                let below = beta_cdf(alpha, beta, m);
                let upper = beta_cdf(alpha, beta, max);
                let ex2 = kept2
                    + below * m * m / 3.0
                    + (1.0 - upper) * (1.0 + max + max * max) / 3.0;
                let mu = self.mean();
                ex2 - mu * mu
            }
            Distribution::Degenerate { .. } => 0.0,
        }
    }

    /// One draw from `rng`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Gaussian { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + sigma * z
            }
            Distribution::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Distribution::Exponential { lambda } => {
                // 1 - U lies in (0, 1]
                -(1.0 - rng.random::<f64>()).ln() / lambda
            }
            Distribution::Beta { alpha, beta } => draw_beta(alpha, beta, rng),
            Distribution::TruncatedBetaMixture {
                alpha,
                beta,
                m,
                max,
            } => {
                let z = draw_beta(alpha, beta, rng);
                if z < m {
                    m * rng.random::<f64>()
                } else if z >= max {
                    max + (1.0 - max) * rng.random::<f64>()
                } else {
                    z
                }
            }
            Distribution::Degenerate { value } => value,
        }
    }

    /// `n` i.i.d. draws fully determined by `stream`.
    pub fn sample(&self, n: usize, stream: &Stream) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InsufficientSample { needed: 1, got: 0 });
        }
        let mut rng = stream.rng();
        Ok((0..n).map(|_| self.draw(&mut rng)).collect())
    }
}

fn beta_cdf(alpha: f64, beta: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        beta_reg(alpha, beta, t)
    }
}

fn draw_beta<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    // parameters are validated by the caller
    let x: f64 = Gamma::new(alpha, 1.0).unwrap().sample(rng);
    let y: f64 = Gamma::new(beta, 1.0).unwrap().sample(rng);
    if x + y == 0.0 {
        // both underflowed; only possible for tiny shapes
        return if alpha >= beta { 1.0 } else { 0.0 };
    }
    x / (x + y)
}

/// Fits a Beta law with mean `base` putting `mass` of its probability on
/// `[m, max]`.
///
/// The mean constraint fixes `beta = alpha (1 - base) / base`; `alpha` is
/// found by bisection on `[1e-3, 1e4]` to a width of `1e-8`.
pub fn fit_beta(base: f64, m: f64, max: f64, mass: f64) -> Result<(f64, f64)> {
    if !(0.0 < m && m < base && base < max && max <= 1.0) {
        return Err(Error::domain(format!(
            "fit_beta needs 0 < m < base < M <= 1, got m={m}, base={base}, M={max}"
        )));
    }
    if !(0.0 < mass && mass < 1.0) {
        return Err(Error::domain(format!("mass must lie in (0, 1), got {mass}")));
    }
    let shape = |alpha: f64| alpha * (1.0 - base) / base;
    let captured = |alpha: f64| {
        let b = shape(alpha);
        beta_cdf(alpha, b, max) - beta_cdf(alpha, b, m)
    };
    let (mut lo, mut hi) = (1e-3, 1e4);
    let (f_lo, f_hi) = (captured(lo) - mass, captured(hi) - mass);
    if f_lo * f_hi > 0.0 {
        return Err(Error::NoSolution(format!(
            "captured mass spans [{:.6}, {:.6}] on the alpha bracket, target {mass}",
            f_lo + mass,
            f_hi + mass
        )));
    }
    let rising = f_hi > f_lo;
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        let f = captured(mid) - mass;
        if (f < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    Ok((alpha, shape(alpha)))
}

/// One named input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedInput {
    pub name: String,
    #[serde(rename = "dist")]
    pub distribution: Distribution,
}

/// Ordered list of independent inputs; position `i` is input `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<NamedInput>", into = "Vec<NamedInput>")]
pub struct InputModel {
    inputs: Vec<NamedInput>,
}

impl InputModel {
    pub fn new(inputs: Vec<NamedInput>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::domain("an input model needs at least one input"));
        }
        for (i, input) in inputs.iter().enumerate() {
            if input.name.is_empty() {
                return Err(Error::domain(format!("input {} has an empty name", i + 1)));
            }
            if inputs[..i].iter().any(|o| o.name == input.name) {
                return Err(Error::domain(format!("duplicate input name {:?}", input.name)));
            }
            input.distribution.validate()?;
        }
        Ok(InputModel { inputs })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, Distribution)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(name, distribution)| NamedInput {
                    name: name.into(),
                    distribution,
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.inputs.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.inputs.iter().map(|i| i.name.as_str())
    }

    pub fn distribution(&self, index: usize) -> &Distribution {
        &self.inputs[index].distribution
    }

    pub fn inputs(&self) -> &[NamedInput] {
        &self.inputs
    }

    pub fn means(&self) -> Vec<f64> {
        self.inputs.iter().map(|i| i.distribution.mean()).collect()
    }
}

impl TryFrom<Vec<NamedInput>> for InputModel {
    type Error = Error;

    fn try_from(inputs: Vec<NamedInput>) -> Result<Self> {
        InputModel::new(inputs)
    }
}

impl From<InputModel> for Vec<NamedInput> {
    fn from(model: InputModel) -> Self {
        model.inputs
    }
}
