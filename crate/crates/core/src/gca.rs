//! Giant Cell Arteritis decision model: expected utilities of four
//! strategies and a sensitivity study over the uncertain inputs.
//!
//! Strategies: A treats no one, B biopsies and treats positives, C biopsies
//! and treats everyone, D treats everyone without biopsy.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{build_cvm_design, evaluate_rows, fmt_f64, iid_sample, Model};
use crate::distributions::{Distribution, InputModel};
use crate::error::{Error, Result};
use crate::estimators::{
    beta_estimate, cvm_estimate, dominance_counts, equal_probability_bins, multivariate_sobol, CiMethod, CiOptions, Estimate,
    Method,
};

pub const STRATEGIES: [&str; 4] = ["A", "B", "C", "D"];

/// Names of the uncertain inputs, in ranking-position order 1..7.
pub const RANDOM_INPUTS: [&str; 7] = ["gc", "pc", "e", "sens", "du_gc", "du_p", "du_pc"];

/// Shape parameter of the `gc` row as printed in the source table, and the
/// value for which the mean equals the base value 0.3.
pub const GC_ALPHA_PRINTED: f64 = 4.179;
pub const GC_ALPHA_MEAN_FITTED: f64 = 4.719;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcaParams {
    /// Probability of the disease.
    pub g: f64,
    /// Probability of severe complications without treatment.
    pub gc: f64,
    /// Probability of treatment side effects.
    pub pc: f64,
    /// Treatment efficacy.
    pub e: f64,
    /// Biopsy sensitivity.
    pub sens: f64,
    pub du_gc: f64,
    pub du_p: f64,
    pub du_pc: f64,
    pub du_s: f64,
    pub du_b: f64,
    pub du_dx: f64,
}

impl GcaParams {
    pub fn base() -> Self {
        GcaParams {
            g: 0.8,
            gc: 0.3,
            pc: 0.2,
            e: 0.9,
            sens: 0.83,
            du_gc: 0.8,
            du_p: 0.08,
            du_pc: 0.3,
            du_s: 0.12,
            du_b: 0.005,
            du_dx: 0.025,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g", self.g),
            ("gc", self.gc),
            ("pc", self.pc),
            ("e", self.e),
            ("sens", self.sens),
            ("du_gc", self.du_gc),
            ("du_p", self.du_p),
            ("du_pc", self.du_pc),
            ("du_s", self.du_s),
            ("du_b", self.du_b),
            ("du_dx", self.du_dx),
        ];
        match fields.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
            Some((name, v)) => Err(Error::domain(format!("{name} must lie in [0, 1], got {v}"))),
            None => Ok(()),
        }
    }

    /// Replaces the seven uncertain inputs with `x`, in [`RANDOM_INPUTS`] order.
    pub fn with_random(mut self, x: &[f64]) -> Self {
        self.gc = x[0];
        self.pc = x[1];
        self.e = x[2];
        self.sens = x[3];
        self.du_gc = x[4];
        self.du_p = x[5];
        self.du_pc = x[6];
        self
    }

    pub fn random_values(&self) -> [f64; 7] {
        [self.gc, self.pc, self.e, self.sens, self.du_gc, self.du_p, self.du_pc]
    }
}

/// Expected utilities `(U_A, U_B, U_C, U_D)`.
pub fn gca_utilities(t: &GcaParams) -> [f64; 4] {
    let GcaParams {
        g,
        gc,
        pc,
        e,
        sens,
        du_gc,
        du_p,
        du_pc,
        du_s,
        du_b,
        du_dx,
    } = *t;
    let treated_gca = 1.0 - du_s - du_p - pc * du_pc - (1.0 - e) * gc * du_gc;
    let untreated_gca = 1.0 - du_s - gc * du_gc;
    let treatment = du_p + pc * du_pc;

    let a = g * (gc * (1.0 - du_s - du_gc - du_dx) + (1.0 - gc) * (1.0 - du_s - du_dx)) + (1.0 - g) * (1.0 - du_dx);
    let b = g * sens * (treated_gca - du_b) + g * (1.0 - sens) * (untreated_gca - du_b) + (1.0 - g) * (1.0 - du_b);
    let c = g * (treated_gca - du_b) + (1.0 - g) * (1.0 - du_b - treatment);
    let d = g * (treated_gca - du_dx) + (1.0 - g) * (1.0 - treatment - du_dx);
    [a, b, c, d]
}

/// The decision model as a map from the seven uncertain inputs to the four
/// strategy utilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcaModel {
    pub fixed: GcaParams,
}

impl Model for GcaModel {
    fn output_dim(&self) -> usize {
        4
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> std::result::Result<(), String> {
        out.copy_from_slice(&gca_utilities(&self.fixed.with_random(x)));
        Ok(())
    }
}

/// Settings of the sensitivity study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcaStudyConfig {
    /// Values of `g`, `du_s`, `du_b`, `du_dx`; the uncertain fields are ignored.
    #[serde(default = "GcaParams::base")]
    pub fixed: GcaParams,
    /// Laws of the seven uncertain inputs, in [`RANDOM_INPUTS`] order.
    #[serde(default = "default_random")]
    pub random: InputModel,
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// Equal-probability bins of the beta index.
    #[serde(default = "default_partitions")]
    pub partitions: usize,
    /// Standard errors of the Cramer-von Mises and beta indices.
    #[serde(default = "default_ci")]
    pub ci: CiOptions,
}

fn default_random() -> InputModel {
    table_inputs(GC_ALPHA_PRINTED)
}

fn default_n() -> usize {
    100_000
}

fn default_partitions() -> usize {
    20
}

fn default_ci() -> CiOptions {
    CiOptions::with_method(CiMethod::Subsampling)
}

/// The seven uncertain inputs with the tabulated truncated-Beta laws; the
/// `gc` row takes the given shape `alpha`.
pub fn table_inputs(gc_alpha: f64) -> InputModel {
    let rows = [
        (gc_alpha, 11.011, 0.05, 0.5),
        (2.647, 10.589, 0.05, 0.5),
        (27.787, 3.087, 0.8, 1.0),
        (7.554, 1.547, 0.6, 1.0),
        (27.454, 6.864, 0.3, 0.9),
        (4.555, 52.380, 0.03, 0.2),
        (15.291, 35.680, 0.2, 0.9),
    ];
    InputModel::from_pairs(RANDOM_INPUTS.iter().zip(rows).map(|(name, (alpha, beta, m, max))| {
        (
            *name,
            Distribution::TruncatedBetaMixture { alpha, beta, m, max },
        )
    }))
    .expect("table rows are valid")
}

impl Default for GcaStudyConfig {
    fn default() -> Self {
        GcaStudyConfig {
            fixed: GcaParams::base(),
            random: default_random(),
            n: default_n(),
            seed: 0,
            partitions: default_partitions(),
            ci: default_ci(),
        }
    }
}

impl GcaStudyConfig {
    /// Every uncertain input pinned at its base value.
    pub fn degenerate_at_base() -> Self {
        let base = GcaParams::base().random_values();
        GcaStudyConfig {
            random: InputModel::from_pairs(
                RANDOM_INPUTS
                    .iter()
                    .zip(base)
                    .map(|(name, value)| (*name, Distribution::Degenerate { value })),
            )
            .expect("valid by construction"),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fixed.validate()?;
        let names: Vec<&str> = self.random.names().collect();
        if names != RANDOM_INPUTS {
            return Err(Error::Config(format!(
                "random inputs must be {} in this order, got {}",
                RANDOM_INPUTS.join(", "),
                names.join(", ")
            )));
        }
        if self.n < 1000 {
            return Err(Error::InsufficientSample { needed: 1000, got: self.n });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanWithSe {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedUtilities {
    #[serde(rename = "A")]
    pub a: MeanWithSe,
    #[serde(rename = "B")]
    pub b: MeanWithSe,
    #[serde(rename = "C")]
    pub c: MeanWithSe,
    #[serde(rename = "D")]
    pub d: MeanWithSe,
}

impl ExpectedUtilities {
    pub fn as_array(&self) -> [MeanWithSe; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputIndices {
    pub input: String,
    /// 1-based position used in the ranking strings.
    pub position: usize,
    pub cvm: Estimate,
    pub multivariate_sobol: Estimate,
    pub beta: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rankings {
    pub cvm: String,
    pub sobol: String,
    pub beta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcaReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub expected_utilities: ExpectedUtilities,
    pub best: String,
    pub indices: Vec<InputIndices>,
    pub rankings: Rankings,
}

/// Input positions sorted by decreasing value, ties kept in position order.
pub fn ranking_string(values: &[f64]) -> String {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order.iter().map(|i| (i + 1).to_string()).collect()
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> MeanWithSe {
    // centered on the first value so that a constant column is reproduced exactly
    let first = values.clone().next().unwrap_or(0.0);
    let n = values.clone().count() as f64;
    let mean_dev = values.clone().map(|v| v - first).sum::<f64>() / n;
    let var = values.map(|v| (v - first - mean_dev).powi(2)).sum::<f64>() / (n - 1.0);
    MeanWithSe {
        value: first + mean_dev,
        se: (var / n).sqrt(),
    }
}

fn zero(method: Method, n: usize) -> Estimate {
    Estimate {
        method,
        value: 0.0,
        std_error: 0.0,
        ci_low: 0.0,
        ci_high: 0.0,
        n,
        p: None,
        seed: None,
        ci_method: CiMethod::None,
    }
}

/// Expected utilities, best strategy, and per-input Cramer-von Mises,
/// multivariate Sobol and beta indices with the induced rankings.
pub fn run_gca_study(cfg: &GcaStudyConfig) -> Result<GcaReport> {
    cfg.validate()?;
    let model = GcaModel { fixed: cfg.fixed };
    let inputs = &cfg.random;
    let d = inputs.dim();
    let n = cfg.n;

    let x = iid_sample(inputs, n, cfg.seed)?;
    let y = evaluate_rows(&model, &x, d)?;
    let means: Vec<MeanWithSe> = (0..4).map(|s| mean_se(y.iter().skip(s).step_by(4).copied())).collect();
    let best = (0..4)
        .max_by(|&a, &b| means[a].value.total_cmp(&means[b].value).then(b.cmp(&a)))
        .expect("four strategies");
    let all = dominance_counts(&y, 4);

    let per_input = |i: usize| -> Result<InputIndices> {
        let dist = inputs.distribution(i);
        let name = RANDOM_INPUTS[i].to_owned();
        if dist.is_degenerate() {
            return Ok(InputIndices {
                input: name,
                position: i + 1,
                cvm: zero(Method::Cvm, n),
                multivariate_sobol: zero(Method::MultivariateSobol, n),
                beta: zero(Method::BetaIndex, n),
            });
        }
        let design = build_cvm_design(&model, inputs, &[i], n, cfg.seed)?;
        let cvm = cvm_estimate(&design, &cfg.ci)?.with_seed(cfg.seed);
        let sobol_opts = CiOptions {
            method: CiMethod::Asymptotic,
            ..cfg.ci
        };
        let multivariate = match multivariate_sobol(&design.pair(), &sobol_opts) {
            Ok(e) => e.with_seed(cfg.seed),
            Err(Error::DegenerateOutput(_)) => zero(Method::MultivariateSobol, n),
            Err(e) => return Err(e),
        };
        let xi: Vec<f64> = x.iter().skip(i).step_by(d).copied().collect();
        let bins = equal_probability_bins(dist, &xi, cfg.partitions);
        let beta = beta_estimate(&bins, cfg.partitions, &y, 4, Some(&all), &cfg.ci)?.with_seed(cfg.seed);
        Ok(InputIndices {
            input: name,
            position: i + 1,
            cvm,
            multivariate_sobol: multivariate,
            beta,
        })
    };
    let indices = (0..d).into_par_iter().map(per_input).collect::<Result<Vec<_>>>()?;
    let rank = |f: fn(&InputIndices) -> f64| ranking_string(&indices.iter().map(f).collect::<Vec<_>>());
    let rankings = Rankings {
        cvm: rank(|r| r.cvm.value),
        sobol: rank(|r| r.multivariate_sobol.value),
        beta: rank(|r| r.beta.value),
    };
    Ok(GcaReport {
        n,
        seed: cfg.seed,
        expected_utilities: ExpectedUtilities {
            a: means[0],
            b: means[1],
            c: means[2],
            d: means[3],
        },
        best: STRATEGIES[best].to_owned(),
        indices,
        rankings,
    })
}

impl GcaReport {
    /// Per-input index table:
    /// `position,input,cvm,cvm_se,multivariate_sobol,multivariate_sobol_se,beta,beta_se`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Protocol(e.to_string());
        w.write_record([
            "position",
            "input",
            "cvm",
            "cvm_se",
            "multivariate_sobol",
            "multivariate_sobol_se",
            "beta",
            "beta_se",
        ])
        .map_err(err)?;
        for r in &self.indices {
            w.write_record([
                r.position.to_string(),
                r.input.clone(),
                fmt_f64(r.cvm.value),
                fmt_f64(r.cvm.std_error),
                fmt_f64(r.multivariate_sobol.value),
                fmt_f64(r.multivariate_sobol.std_error),
                fmt_f64(r.beta.value),
                fmt_f64(r.beta.std_error),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<gca csv>", e))
    }

    /// Monte Carlo means in strategy order.
    pub fn means(&self) -> [f64; 4] {
        self.expected_utilities.as_array().map(|m| m.value)
    }
}

/// `U_s` at the mean of every uncertain input. Each input enters every
/// utility affinely and inputs are independent, so this is `E[U_s]`.
pub fn expected_utilities_exact(cfg: &GcaStudyConfig) -> [f64; 4] {
    gca_utilities(&cfg.fixed.with_random(&cfg.random.means()))
}
