//! Index estimators and their confidence intervals.

mod beta;
mod cvm;
mod hsobol;
mod sobol;

pub use beta::{beta_index, beta_index_from_sample, equal_probability_bins};
pub(crate) use beta::{beta_estimate, dominance_counts};
pub use cvm::{cvm_estimate, cvm_normalize, cvm_value, cvm_value_direct, cvm_variance_plugin};
pub use hsobol::{hsobol, hsobol_value, hsobol_variance, symmetric_products, SymmetricProducts, MAX_ORDER};
pub use sobol::{multivariate_sobol, sobol_classic};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::rng::{Purpose, Stream};

/// Which index an [`Estimate`] refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Pick-and-Freeze numerator `Var E[Y | X_v]`.
    SobolClassic,
    /// Numerator divided by the pooled variance.
    SobolRatio,
    HSobol(usize),
    Cvm,
    CvmNormalized(u32),
    BetaIndex,
    MultivariateSobol,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::SobolClassic => f.write_str("sobol_classic"),
            Method::SobolRatio => f.write_str("sobol_ratio"),
            Method::HSobol(p) => write!(f, "hsobol({p})"),
            Method::Cvm => f.write_str("cvm"),
            Method::CvmNormalized(c) => write!(f, "cvm_normalized({c})"),
            Method::BetaIndex => f.write_str("beta_index"),
            Method::MultivariateSobol => f.write_str("multivariate_sobol"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let arg = |prefix: &str| -> Option<Result<u32, String>> {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_suffix(')'))
                .map(|a| a.parse().map_err(|_| format!("bad argument in `{s}`")))
        };
        Ok(match s {
            "sobol_classic" => Method::SobolClassic,
            "sobol_ratio" => Method::SobolRatio,
            "cvm" => Method::Cvm,
            "beta_index" => Method::BetaIndex,
            "multivariate_sobol" => Method::MultivariateSobol,
            _ => {
                if let Some(p) = arg("hsobol(") {
                    Method::HSobol(p? as usize)
                } else if let Some(c) = arg("cvm_normalized(") {
                    Method::CvmNormalized(c?)
                } else {
                    return Err(format!("unknown method `{s}`"));
                }
            }
        })
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// Normal interval from a plug-in asymptotic variance.
    Asymptotic,
    /// Percentile interval over block resamples.
    Bootstrap,
    /// Normal interval with the spread of estimates on disjoint block groups.
    Subsampling,
    None,
}

/// How standard errors and intervals are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CiOptions {
    pub method: CiMethod,
    pub resamples: usize,
    pub subsamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for CiOptions {
    fn default() -> Self {
        CiOptions {
            method: CiMethod::Bootstrap,
            resamples: 500,
            subsamples: 10,
            level: 0.95,
            seed: 0,
        }
    }
}

impl CiOptions {
    pub fn with_method(method: CiMethod) -> Self {
        CiOptions {
            method,
            ..Default::default()
        }
    }

    pub fn none() -> Self {
        Self::with_method(CiMethod::None)
    }
}

/// Point value with standard error and confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub method: Method,
    pub value: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub ci_method: CiMethod,
}

impl Estimate {
    fn point(method: Method, value: f64, n: usize) -> Self {
        Estimate {
            method,
            value,
            std_error: 0.0,
            ci_low: value,
            ci_high: value,
            n,
            p: None,
            seed: None,
            ci_method: CiMethod::None,
        }
    }

    fn normal(method: Method, value: f64, std_error: f64, level: f64, n: usize, ci: CiMethod) -> Self {
        let half = z_quantile(level) * std_error;
        Estimate {
            std_error,
            ci_low: value - half,
            ci_high: value + half,
            ci_method: ci,
            ..Estimate::point(method, value, n)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Whether `truth` lies within `z` standard errors.
    pub fn covers(&self, truth: f64, z: f64) -> bool {
        (self.value - truth).abs() <= z * self.std_error
    }
}

/// Two-sided normal quantile for confidence `level`.
pub fn z_quantile(level: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + level / 2.0)
}

/// Sample variance with divisor `n`.
pub(crate) fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    (population_variance(xs) * n / (n - 1.0)).sqrt()
}

/// Resampled statistics for `resamples` draws of `n` block indices with
/// replacement. `stat` gets the resampled indices of each draw.
pub(crate) fn bootstrap_stats<F>(n: usize, opts: &CiOptions, purpose_salt: u32, stat: F) -> Vec<f64>
where
    F: Fn(&[usize], &mut rand_chacha::ChaCha12Rng) -> f64 + Sync,
{
    (0..opts.resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = Stream::new(opts.seed, Purpose::Bootstrap)
                .input(purpose_salt as usize)
                .replicate(b)
                .rng();
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            stat(&idx, &mut rng)
        })
        .collect()
}

/// Percentile interval from bootstrap statistics, widened to contain the
/// point value when the resampling distribution is skewed away from it.
pub(crate) fn bootstrap_estimate(method: Method, value: f64, n: usize, stats: &[f64], level: f64) -> Estimate {
    let finite: Vec<f64> = stats.iter().copied().filter(|v| v.is_finite()).collect();
    let sd = sample_sd(&finite);
    let mut sorted = finite;
    sorted.sort_by(f64::total_cmp);
    let q = |prob: f64| -> f64 {
        if sorted.is_empty() {
            return value;
        }
        let pos = prob * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    };
    let alpha = 1.0 - level;
    Estimate {
        std_error: sd,
        ci_low: q(alpha / 2.0).min(value),
        ci_high: q(1.0 - alpha / 2.0).max(value),
        ci_method: CiMethod::Bootstrap,
        ..Estimate::point(method, value, n)
    }
}

/// Standard error from `m` disjoint contiguous groups of blocks: the
/// spread of group estimates divided by `sqrt(m)`.
pub(crate) fn subsampling_estimate<F>(method: Method, value: f64, n: usize, opts: &CiOptions, stat: F) -> Estimate
where
    F: Fn(std::ops::Range<usize>) -> f64 + Sync,
{
    let m = opts.subsamples.clamp(2, n.max(2) / 2);
    let groups: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|g| stat(g * n / m..(g + 1) * n / m))
        .collect();
    let se = sample_sd(&groups) / (m as f64).sqrt();
    Estimate::normal(method, value, se, opts.level, n, CiMethod::Subsampling)
}
