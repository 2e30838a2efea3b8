//! Command-line front end: study configuration, builtin and external model
//! execution, design/output file exchange and report emission.
//!
//! The `pickfreeze` binary is a thin wrapper around [`run`].

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::Duration;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use wait_timeout::ChildExt;

use crate::analytic::{exp_cvm_closed, exp_hq_closed, exp_sobol_closed, oracle_csv, toy_oracle_curves, ContinuousInput, ExpModel, ToyFamily, ToyModel};
use crate::design::{fmt_f64, DesignPlan, Evaluated, Model};
use crate::distributions::{Distribution, InputModel};
use crate::error::{Error, Result};
use crate::estimators::{
    beta_estimate, cvm_estimate, cvm_normalize, equal_probability_bins, hsobol, multivariate_sobol,
    sobol_classic, CiMethod, CiOptions, Estimate,
};
use crate::gca::{run_gca_study, table_inputs, GcaModel, GcaParams, GcaStudyConfig, GC_ALPHA_PRINTED, STRATEGIES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Exit status for an error: 2 configuration, 3 model failure, 4 numeric.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io { .. } => EXIT_CONFIG,
        Error::Model { .. } | Error::ExternalModel(_) | Error::Timeout(_) | Error::Protocol(_) | Error::Parse { .. } => {
            EXIT_MODEL
        }
        Error::ParameterDomain(_)
        | Error::InsufficientSample { .. }
        | Error::DegenerateOutput(_)
        | Error::OrderLimit { .. }
        | Error::NoSolution(_)
        | Error::Tolerance { .. }
        | Error::Partition(_) => EXIT_NUMERIC,
    }
}

/// Estimator requested by a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorSpec {
    /// Pick-and-Freeze numerator `Var E[Y | X_v]`.
    Sobol,
    SobolRatio,
    HSobol(usize),
    Cvm,
    /// Cramer-von Mises index rescaled onto `[0, 1]`.
    CvmNormalized,
    Beta,
    MultivariateSobol,
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::Sobol => f.write_str("sobol"),
            EstimatorSpec::SobolRatio => f.write_str("sobol_ratio"),
            EstimatorSpec::HSobol(p) => write!(f, "hsobol({p})"),
            EstimatorSpec::Cvm => f.write_str("cvm"),
            EstimatorSpec::CvmNormalized => f.write_str("cvm_normalized"),
            EstimatorSpec::Beta => f.write_str("beta"),
            EstimatorSpec::MultivariateSobol => f.write_str("multivariate_sobol"),
        }
    }
}

impl FromStr for EstimatorSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "sobol" | "sobol_classic" => EstimatorSpec::Sobol,
            "sobol_ratio" => EstimatorSpec::SobolRatio,
            "cvm" => EstimatorSpec::Cvm,
            "cvm_normalized" => EstimatorSpec::CvmNormalized,
            "beta" | "beta_index" => EstimatorSpec::Beta,
            "multivariate_sobol" => EstimatorSpec::MultivariateSobol,
            _ => {
                let p = s
                    .strip_prefix("hsobol(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| {
                        format!(
                            "unknown method `{s}`; expected sobol, sobol_ratio, hsobol(p), cvm, cvm_normalized, beta or multivariate_sobol"
                        )
                    })?;
                EstimatorSpec::HSobol(p.trim().parse().map_err(|_| format!("bad order in `{s}`"))?)
            }
        })
    }
}

impl Serialize for EstimatorSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EstimatorSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl EstimatorSpec {
    /// Replicates per block of the design it needs; 0 for an i.i.d. sample.
    fn replicates(self) -> usize {
        match self {
            EstimatorSpec::HSobol(p) => p,
            EstimatorSpec::Beta => 0,
            _ => 2,
        }
    }

    fn needs_w(self) -> bool {
        matches!(self, EstimatorSpec::Cvm | EstimatorSpec::CvmNormalized)
    }
}

/// `y = sum_i c_i x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
}

impl Model for LinearModel {
    fn output_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> std::result::Result<(), String> {
        out[0] = self.coefficients.iter().zip(x).map(|(c, x)| c * x).sum();
        Ok(())
    }
}

/// Models compiled into the tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Builtin {
    /// `exp(X1 + 2 X2)` with standard Gaussian inputs.
    Exp,
    /// `alpha X1 + X2`, `X1 ~ Bernoulli(p)`, `X2` of the given family with
    /// matched variance.
    Toy { family: ToyFamily, p: f64, alpha: f64 },
    /// `sum_i c_i x_i` over the configured inputs.
    Linear { coefficients: Vec<f64> },
    /// Four strategy utilities of the decision model.
    Gca,
}

enum BuiltinModel {
    Exp(ExpModel),
    Toy(ToyModel),
    Linear(LinearModel),
    Gca(GcaModel),
}

impl Model for BuiltinModel {
    fn output_dim(&self) -> usize {
        match self {
            BuiltinModel::Gca(m) => m.output_dim(),
            _ => 1,
        }
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> std::result::Result<(), String> {
        match self {
            BuiltinModel::Exp(m) => Model::eval(m, x, out),
            BuiltinModel::Toy(m) => Model::eval(m, x, out),
            BuiltinModel::Linear(m) => m.eval(x, out),
            BuiltinModel::Gca(m) => m.eval(x, out),
        }
    }
}

impl Builtin {
    fn instantiate(&self) -> Result<BuiltinModel> {
        Ok(match self {
            Builtin::Exp => BuiltinModel::Exp(ExpModel),
            Builtin::Toy { family, p, alpha } => BuiltinModel::Toy(ToyModel::coupled(*family, *alpha, *p)?),
            Builtin::Linear { coefficients } => BuiltinModel::Linear(LinearModel {
                coefficients: coefficients.clone(),
            }),
            Builtin::Gca => BuiltinModel::Gca(GcaModel {
                fixed: GcaParams::base(),
            }),
        })
    }

    fn default_inputs(&self) -> Result<Option<InputModel>> {
        Ok(match self {
            Builtin::Exp => Some(ExpModel.inputs()),
            Builtin::Toy { family, p, alpha } => Some(ToyModel::coupled(*family, *alpha, *p)?.inputs()),
            Builtin::Linear { .. } => None,
            Builtin::Gca => Some(table_inputs(GC_ALPHA_PRINTED)),
        })
    }

    fn dim(&self) -> usize {
        match self {
            Builtin::Exp | Builtin::Toy { .. } => 2,
            Builtin::Linear { coefficients } => coefficients.len(),
            Builtin::Gca => 7,
        }
    }

    fn label(&self) -> String {
        match self {
            Builtin::Exp => "exp".into(),
            Builtin::Toy { family, p, alpha } => format!("toy({}, p={p}, alpha={alpha})", family.name()),
            Builtin::Linear { .. } => "linear".into(),
            Builtin::Gca => "gca".into(),
        }
    }
}

fn default_timeout() -> u64 {
    600
}

/// A simulator run as a subprocess: `command... <design.csv> <outputs.csv>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalModel {
    pub command: Vec<String>,
    #[serde(default)]
    pub working_dir: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Allows several designs to be evaluated concurrently.
    #[serde(default)]
    pub reentrant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    Builtin(Builtin),
    External(ExternalModel),
}

/// Interval settings of a study; resampling streams derive from the study seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CiConfig {
    pub method: CiMethod,
    pub resamples: usize,
    pub subsamples: usize,
    pub level: f64,
}

impl Default for CiConfig {
    fn default() -> Self {
        let d = CiOptions::default();
        CiConfig {
            method: d.method,
            resamples: d.resamples,
            subsamples: d.subsamples,
            level: d.level,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub report: PathBuf,
    pub table: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            report: "estimates.json".into(),
            table: "estimates.csv".into(),
        }
    }
}

fn default_partitions() -> usize {
    20
}

/// One estimation study, read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Input laws; builtin models other than `linear` supply their own.
    #[serde(default)]
    pub inputs: Option<InputModel>,
    #[serde(default)]
    pub model: Option<ModelSource>,
    pub method: EstimatorSpec,
    /// 1-based input index sets.
    pub targets: Vec<Vec<usize>>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ci: CiConfig,
    /// Equal-probability bins of the beta index.
    #[serde(default = "default_partitions")]
    pub partitions: usize,
    #[serde(default)]
    pub outputs: OutputPaths,
}

/// Reads a JSON file, reporting the path of the offending field on error.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_json(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::Config(inner.to_string())
        } else {
            Error::Config(format!("at `{path}`: {inner}"))
        }
    })
}

impl StudyConfig {
    pub fn ci_options(&self) -> CiOptions {
        CiOptions {
            method: self.ci.method,
            resamples: self.ci.resamples,
            subsamples: self.ci.subsamples,
            level: self.ci.level,
            seed: self.seed,
        }
    }

    /// Input model after applying builtin defaults, checked against the model.
    pub fn resolve_inputs(&self) -> Result<InputModel> {
        let builtin = match &self.model {
            Some(ModelSource::Builtin(b)) => Some(b),
            _ => None,
        };
        let inputs = match (&self.inputs, builtin) {
            (Some(i), _) => i.clone(),
            (None, Some(b)) => b
                .default_inputs()
                .map_err(|e| Error::Config(e.to_string()))?
                .ok_or_else(|| Error::Config(format!("model `{}` needs an `inputs` list", b.label())))?,
            (None, None) => return Err(Error::Config("`inputs` is required".into())),
        };
        if let Some(b) = builtin {
            if b.dim() != inputs.dim() {
                return Err(Error::Config(format!(
                    "model `{}` takes {} inputs, `inputs` lists {}",
                    b.label(),
                    b.dim(),
                    inputs.dim()
                )));
            }
        }
        Ok(inputs)
    }

    /// Checks everything that does not need the model to run.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.targets.is_empty() {
            return bad("`targets` must list at least one input set".into());
        }
        if self.n < 2 {
            return bad(format!("`N` must be at least 2, got {}", self.n));
        }
        match self.method {
            EstimatorSpec::HSobol(p) if !(2..=crate::estimators::MAX_ORDER).contains(&p) => {
                return bad(format!(
                    "hsobol order must lie in 2..={}, got {p}",
                    crate::estimators::MAX_ORDER
                ))
            }
            EstimatorSpec::Beta => {
                if self.ci.method == CiMethod::Asymptotic {
                    return bad("the beta index has no asymptotic interval; use bootstrap, subsampling or none".into());
                }
                if self.partitions < 2 {
                    return bad(format!("`partitions` must be at least 2, got {}", self.partitions));
                }
                if self.targets.iter().any(|t| t.len() != 1) {
                    return bad("beta targets must each name a single input".into());
                }
            }
            _ => {}
        }
        if !(self.ci.level > 0.0 && self.ci.level < 1.0) {
            return bad(format!("`ci.level` must lie in (0, 1), got {}", self.ci.level));
        }
        if self.ci.method == CiMethod::Bootstrap && self.ci.resamples < 2 {
            return bad("`ci.resamples` must be at least 2".into());
        }
        if self.ci.method == CiMethod::Subsampling && self.ci.subsamples < 2 {
            return bad("`ci.subsamples` must be at least 2".into());
        }
        if let Some(ModelSource::External(ext)) = &self.model {
            if ext.command.is_empty() {
                return bad("`model.external.command` is empty".into());
            }
            if ext.timeout_secs == 0 {
                return bad("`model.external.timeout_secs` must be positive".into());
            }
        }
        if let Some(ModelSource::Builtin(Builtin::Toy { family, p, alpha })) = &self.model {
            ToyModel::coupled(*family, *alpha, *p).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.model.is_some() || self.inputs.is_some() {
            let d = self.resolve_inputs()?.dim();
            for t in &self.targets {
                if t.is_empty() || t.iter().any(|&i| i == 0 || i > d) {
                    return bad(format!("target {t:?} must be a nonempty set of 1-based indices in 1..={d}"));
                }
                let mut s = t.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() != t.len() {
                    return bad(format!("target {t:?} repeats an index"));
                }
            }
        }
        Ok(())
    }

    /// Design plan for one target, or the shared sample for the beta index.
    pub fn plan(&self, inputs: &InputModel, target: &[usize]) -> Result<DesignPlan> {
        let v: Vec<usize> = target.iter().map(|i| i - 1).collect();
        match self.method {
            EstimatorSpec::Beta => DesignPlan::sample(inputs, self.n, self.seed),
            m if m.needs_w() => DesignPlan::cvm(inputs, &v, self.n, self.seed),
            m => DesignPlan::pickfreeze(inputs, &v, m.replicates(), self.n, self.seed),
        }
    }

    /// `(file tag, target)` pairs, one per design to run.
    fn design_jobs(&self) -> Vec<(String, Vec<usize>)> {
        if self.method == EstimatorSpec::Beta {
            vec![("sample".into(), self.targets[0].clone())]
        } else {
            self.targets
                .iter()
                .enumerate()
                .map(|(i, t)| (format!("t{}", i + 1), t.clone()))
                .collect()
        }
    }
}

/// One reported estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    /// 1-based input indices.
    pub target: Vec<usize>,
    /// 1-based output component for scalar estimators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    #[serde(flatten)]
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub model: String,
    pub method: EstimatorSpec,
    pub estimates: Vec<TargetEstimate>,
}

impl EstimateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// `target,component,method,value,std_error,ci_low,ci_high,N,p,seed,ci_method`;
    /// multi-index targets are joined with `;`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Config(format!("cannot write table: {e}"));
        w.write_record([
            "target",
            "component",
            "method",
            "value",
            "std_error",
            "ci_low",
            "ci_high",
            "N",
            "p",
            "seed",
            "ci_method",
        ])
        .map_err(err)?;
        for t in &self.estimates {
            let e = &t.estimate;
            let target: Vec<String> = t.target.iter().map(usize::to_string).collect();
            let ci = serde_json::to_value(e.ci_method).expect("enum serializes");
            w.write_record([
                target.join(";"),
                t.component.map(|c| c.to_string()).unwrap_or_default(),
                e.method.to_string(),
                fmt_f64(e.value),
                fmt_f64(e.std_error),
                fmt_f64(e.ci_low),
                fmt_f64(e.ci_high),
                e.n.to_string(),
                e.p.map(|p| p.to_string()).unwrap_or_default(),
                e.seed.map(|s| s.to_string()).unwrap_or_default(),
                ci.as_str().unwrap_or_default().to_owned(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Config(format!("cannot write table: {e}")))
    }
}

/// Writes `plan` to `<work_dir>/<tag>_design.csv`, runs the command with that
/// path and `<work_dir>/<tag>_outputs.csv`, and attaches what it wrote.
pub fn external_roundtrip(plan: &DesignPlan, model: &ExternalModel, work_dir: &Path, tag: &str) -> Result<Evaluated> {
    fs::create_dir_all(work_dir).map_err(|e| Error::io(work_dir, e))?;
    let work_dir = std::path::absolute(work_dir).map_err(|e| Error::io(work_dir, e))?;
    let design_path = work_dir.join(format!("{tag}_design.csv"));
    let output_path = work_dir.join(format!("{tag}_outputs.csv"));
    if output_path.exists() {
        fs::remove_file(&output_path).map_err(|e| Error::io(&output_path, e))?;
    }
    {
        let file = fs::File::create(&design_path).map_err(|e| Error::io(&design_path, e))?;
        plan.write_csv(BufWriter::new(file))?;
    }

    let (program, args) = model
        .command
        .split_first()
        .ok_or_else(|| Error::Config("external command is empty".into()))?;
    let mut cmd = Command::new(program);
    cmd.args(args)
        .arg(&design_path)
        .arg(&output_path)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped());
    if let Some(dir) = &model.working_dir {
        cmd.current_dir(dir);
    }
    let mut child = cmd
        .spawn()
        .map_err(|e| Error::ExternalModel(format!("cannot start `{program}`: {e}")))?;
    let mut stderr = child.stderr.take().expect("stderr is piped");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let waited = child
        .wait_timeout(Duration::from_secs(model.timeout_secs))
        .map_err(|e| Error::ExternalModel(format!("waiting for `{program}`: {e}")))?;
    let Some(status) = waited else {
        let _ = child.kill();
        let _ = child.wait();
        return Err(Error::Timeout(model.timeout_secs));
    };
    let captured = reader.join().unwrap_or_default();
    if !status.success() {
        return Err(Error::ExternalModel(format!(
            "`{program}` exited with {status}; stderr: {}",
            captured.trim()
        )));
    }
    let file = fs::File::open(&output_path)
        .map_err(|e| Error::Protocol(format!("model did not write {}: {e}", output_path.display())))?;
    let outputs = plan.read_outputs(std::io::BufReader::new(file))?;
    plan.attach(outputs)
}

fn continuous_scalar(w: &[f64], k: usize) -> bool {
    if k != 1 {
        return false;
    }
    let mut s = w.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).all(|p| p[0] != p[1])
}

/// Applies the study estimator to an evaluated design. `inputs` and
/// `targets` are used only for sample plans; other designs report their own
/// frozen set.
pub fn estimate_evaluated(
    cfg: &StudyConfig,
    inputs: Option<&InputModel>,
    plan: &DesignPlan,
    evaluated: &Evaluated,
    targets: &[Vec<usize>],
) -> Result<Vec<TargetEstimate>> {
    let opts = cfg.ci_options();
    let seed = cfg.seed;
    let own: Vec<usize> = plan.frozen.iter().map(|i| i + 1).collect();
    let mismatch = |what: &str| Error::Config(format!("method {} needs {what}", cfg.method));
    let per_component = |k: usize, f: &dyn Fn(usize) -> Result<Estimate>| -> Result<Vec<TargetEstimate>> {
        (0..k)
            .map(|c| {
                Ok(TargetEstimate {
                    target: own.clone(),
                    component: Some(c + 1),
                    estimate: f(c)?.with_seed(seed),
                })
            })
            .collect()
    };
    let whole = |e: Estimate| {
        vec![TargetEstimate {
            target: own.clone(),
            component: None,
            estimate: e.with_seed(seed),
        }]
    };
    match (cfg.method, evaluated) {
        (EstimatorSpec::Sobol | EstimatorSpec::SobolRatio, Evaluated::PickFreeze(d)) if d.p == 2 => {
            let ratio = cfg.method == EstimatorSpec::SobolRatio;
            per_component(d.k, &|c| sobol_classic(d, c, ratio, &opts))
        }
        (EstimatorSpec::HSobol(p), Evaluated::PickFreeze(d)) if d.p == p => per_component(d.k, &|c| hsobol(d, c, &opts)),
        (EstimatorSpec::MultivariateSobol, Evaluated::PickFreeze(d)) if d.p == 2 => Ok(whole(multivariate_sobol(d, &opts)?)),
        (EstimatorSpec::Cvm, Evaluated::Cvm(d)) => Ok(whole(cvm_estimate(d, &opts)?)),
        (EstimatorSpec::CvmNormalized, Evaluated::Cvm(d)) => {
            let raw = cvm_estimate(d, &opts)?;
            Ok(whole(cvm_normalize(&raw, continuous_scalar(&d.w, d.k))?))
        }
        (EstimatorSpec::Beta, Evaluated::Sample { k, y }) => {
            let inputs = inputs.ok_or_else(|| Error::Config("the beta index needs the input laws".into()))?;
            let d = inputs.dim();
            if d != plan.dim() {
                return Err(Error::Config(format!(
                    "design has {} inputs, configuration has {d}",
                    plan.dim()
                )));
            }
            targets
                .iter()
                .map(|t| {
                    let v = t[0] - 1;
                    let xv: Vec<f64> = plan.x.iter().skip(v).step_by(d).copied().collect();
                    let bins = equal_probability_bins(inputs.distribution(v), &xv, cfg.partitions);
                    let est = beta_estimate(&bins, cfg.partitions, y, *k, None, &opts)?;
                    Ok(TargetEstimate {
                        target: t.clone(),
                        component: None,
                        estimate: est.with_seed(seed),
                    })
                })
                .collect()
        }
        (EstimatorSpec::Beta, _) => Err(mismatch("an i.i.d. sample design")),
        (m, _) if m.needs_w() => Err(mismatch("a three-sample design with W rows")),
        (m, _) => Err(mismatch(&format!("a pick-freeze design with {} replicates", m.replicates()))),
    }
}

/// Runs every design of the study against its model and estimates.
/// External-model files go under `work_dir`.
pub fn run_study(cfg: &StudyConfig, work_dir: &Path) -> Result<EstimateReport> {
    cfg.validate()?;
    let source = cfg
        .model
        .as_ref()
        .ok_or_else(|| Error::Config("`model` is required to run a study".into()))?;
    let inputs = cfg.resolve_inputs()?;
    let jobs = cfg.design_jobs();
    let run_job = |(tag, target): &(String, Vec<usize>)| -> Result<Vec<TargetEstimate>> {
        let plan = cfg.plan(&inputs, target)?;
        let evaluated = match source {
            ModelSource::Builtin(b) => plan.attach(plan.evaluate(&b.instantiate()?)?)?,
            ModelSource::External(ext) => external_roundtrip(&plan, ext, work_dir, tag)?,
        };
        estimate_evaluated(cfg, Some(&inputs), &plan, &evaluated, &cfg.targets)
    };
    let parallel = matches!(source, ModelSource::External(ExternalModel { reentrant: true, .. }));
    let results: Vec<Vec<TargetEstimate>> = if parallel {
        jobs.par_iter().map(run_job).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run_job).collect::<Result<_>>()?
    };
    let model = match source {
        ModelSource::Builtin(b) => b.label(),
        ModelSource::External(e) => e.command.join(" "),
    };
    Ok(EstimateReport {
        model,
        method: cfg.method,
        estimates: results.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Parser)]
#[command(name = "pickfreeze", version, about = "Pick-and-Freeze global sensitivity analysis")]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Directory for emitted files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run a study from --config and write the JSON report and CSV table.
    Estimate,
    /// Print closed-form index values of a builtin model.
    Oracle {
        #[command(subcommand)]
        model: OracleModel,
    },
    /// Decision-model study: expected utilities, best strategy, input rankings.
    Gca {
        /// Monte Carlo sample size.
        #[arg(long = "n", short = 'N')]
        n: Option<usize>,
        /// Pin every uncertain input at its base value.
        #[arg(long)]
        degenerate: bool,
    },
    /// Write the design CSVs of a study without evaluating them.
    Design,
    /// Attach an externally produced output CSV to a design and estimate.
    Ingest {
        /// Design CSV written by `design`.
        #[arg(long)]
        design: PathBuf,
        /// Outputs keyed by block, replicate and role.
        #[arg(long)]
        outputs: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleModel {
    /// `exp(X1 + 2 X2)`: D1, D2, S1, S2 and optionally H1_q, H2_q.
    Exp {
        /// Also print the order-q moments.
        #[arg(long)]
        q: Option<u32>,
        /// Decimal places.
        #[arg(long, default_value_t = 4)]
        digits: usize,
    },
    /// `alpha X1 + X2` with `X1 ~ Bernoulli(p)`.
    Toy {
        /// gaussian, uniform or exponential.
        #[arg(long, value_parser = parse_family)]
        family: ToyFamily,
        /// Bernoulli parameter of `X1`.
        #[arg(long)]
        p: f64,
        #[arg(long)]
        alpha: f64,
        /// Law parameter of `X2` (sigma, upper bound or rate) instead of the
        /// variance-matched default.
        #[arg(long)]
        x2_param: Option<f64>,
        /// Also print the order-q moments.
        #[arg(long)]
        q: Option<u32>,
        /// Decimal places.
        #[arg(long, default_value_t = 6)]
        digits: usize,
    },
    /// Toy-model D1, D2, S1, S2 over a grid, written to `<out-dir>/oracle.csv`.
    Curves {
        #[arg(long, value_delimiter = ',', default_value = "gaussian,uniform,exponential", value_parser = parse_family)]
        families: Vec<ToyFamily>,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.99")]
        ps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        alphas: Vec<f64>,
    },
}

fn parse_family(s: &str) -> std::result::Result<ToyFamily, String> {
    ToyFamily::ALL
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| format!("unknown family `{s}`; expected gaussian, uniform or exponential"))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn study_config(cli: &Cli) -> Result<StudyConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg: StudyConfig = load_json(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_estimates(report: &EstimateReport, out: &mut impl Write) {
    for t in &report.estimates {
        let e = &t.estimate;
        let target: Vec<String> = t.target.iter().map(usize::to_string).collect();
        let comp = t.component.map(|c| format!(" y{c}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{{{}}}{comp} {} = {:.6} (se {:.2e}, CI [{:.6}, {:.6}])",
            target.join(","),
            e.method,
            e.value,
            e.std_error,
            e.ci_low,
            e.ci_high
        );
    }
}

fn emit_report(cli: &Cli, cfg: &StudyConfig, report: &EstimateReport, out: &mut impl Write) -> Result<()> {
    let json = cli.out_dir.join(&cfg.outputs.report);
    let table = cli.out_dir.join(&cfg.outputs.table);
    write_file(&json, report.to_json().as_bytes())?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_file(&table, &buf)?;
    print_estimates(report, out);
    Ok(())
}

fn cmd_oracle(cli: &Cli, model: &OracleModel, out: &mut impl Write) -> Result<()> {
    let line = |out: &mut dyn Write, name: &str, v: f64, digits: usize| {
        let _ = writeln!(out, "{name}={v:.digits$}");
    };
    match *model {
        OracleModel::Exp { q, digits } => {
            line(out, "D1", exp_cvm_closed(1)?, digits);
            line(out, "D2", exp_cvm_closed(2)?, digits);
            line(out, "S1", exp_sobol_closed(1)?, digits);
            line(out, "S2", exp_sobol_closed(2)?, digits);
            if let Some(q) = q {
                line(out, &format!("H1_{q}"), exp_hq_closed(1, q)?, digits);
                line(out, &format!("H2_{q}"), exp_hq_closed(2, q)?, digits);
            }
        }
        OracleModel::Toy {
            family,
            p,
            alpha,
            x2_param,
            q,
            digits,
        } => {
            let m = match x2_param {
                None => ToyModel::coupled(family, alpha, p),
                Some(a) => ToyModel::with_x2(
                    alpha,
                    p,
                    match family {
                        ToyFamily::Gaussian => ContinuousInput::Gaussian { sigma: a },
                        ToyFamily::Uniform => ContinuousInput::Uniform { b: a },
                        ToyFamily::Exponential => ContinuousInput::Exponential { lambda: a },
                    },
                ),
            }
            .map_err(|e| Error::Config(e.to_string()))?;
            line(out, "D1", m.cvm_closed(1)?, digits);
            line(out, "D2", m.cvm_closed(2)?, digits);
            line(out, "S1", m.sobol_closed(1)?, digits);
            line(out, "S2", m.sobol_closed(2)?, digits);
            if let Some(q) = q {
                line(out, &format!("H1_{q}"), m.hq_closed(1, q)?, digits);
                line(out, &format!("H2_{q}"), m.hq_closed(2, q)?, digits);
            }
        }
        OracleModel::Curves {
            ref families,
            ref ps,
            ref alphas,
        } => {
            let rows = toy_oracle_curves(families, ps, alphas).map_err(|e| Error::Config(e.to_string()))?;
            let path = cli.out_dir.join("oracle.csv");
            write_file(&path, oracle_csv(&rows).as_bytes())?;
            let _ = writeln!(out, "wrote {} rows to {}", rows.len(), path.display());
        }
    }
    Ok(())
}

fn cmd_gca(cli: &Cli, n: Option<usize>, degenerate: bool, out: &mut impl Write) -> Result<()> {
    let mut cfg: GcaStudyConfig = match &cli.config {
        Some(path) => load_json(path)?,
        None => GcaStudyConfig::default(),
    };
    if degenerate {
        let base = GcaParams::base().random_values();
        cfg.random = InputModel::from_pairs(
            cfg.random
                .names()
                .map(str::to_owned)
                .collect::<Vec<_>>()
                .into_iter()
                .zip(base)
                .map(|(name, value)| (name, Distribution::Degenerate { value })),
        )?;
    }
    if let Some(n) = n {
        cfg.n = n;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| match e {
        Error::InsufficientSample { needed, got } => Error::Config(format!("N must be at least {needed}, got {got}")),
        Error::ParameterDomain(m) => Error::Config(m),
        other => other,
    })?;
    let report = run_gca_study(&cfg)?;
    write_file(
        &cli.out_dir.join("gca_report.json"),
        (serde_json::to_string_pretty(&report).expect("report serializes") + "\n").as_bytes(),
    )?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_file(&cli.out_dir.join("gca_indices.csv"), &buf)?;
    for (s, m) in STRATEGIES.iter().zip(report.expected_utilities.as_array()) {
        let _ = writeln!(out, "E[U_{s}] = {:.4} (se {:.2e})", m.value, m.se);
    }
    let _ = writeln!(out, "best: {}", report.best);
    let _ = writeln!(out, "ranking cvm: {}", report.rankings.cvm);
    let _ = writeln!(out, "ranking sobol: {}", report.rankings.sobol);
    let _ = writeln!(out, "ranking beta: {}", report.rankings.beta);
    Ok(())
}

fn cmd_design(cli: &Cli, out: &mut impl Write) -> Result<()> {
    let cfg = study_config(cli)?;
    let inputs = cfg.resolve_inputs()?;
    for (tag, target) in cfg.design_jobs() {
        let plan = cfg.plan(&inputs, &target)?;
        let path = cli.out_dir.join(format!("design_{tag}.csv"));
        let mut buf = Vec::new();
        plan.write_csv(&mut buf)?;
        write_file(&path, &buf)?;
        let _ = writeln!(out, "{}", path.display());
    }
    Ok(())
}

fn cmd_ingest(cli: &Cli, design: &Path, outputs: &Path, out: &mut impl Write) -> Result<()> {
    let cfg = study_config(cli)?;
    let open = |p: &Path| fs::File::open(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())));
    let plan = DesignPlan::read_csv(std::io::BufReader::new(open(design)?))?;
    let evaluated = plan.attach(plan.read_outputs(std::io::BufReader::new(open(outputs)?))?)?;
    let inputs = match cfg.method {
        EstimatorSpec::Beta => Some(cfg.resolve_inputs()?),
        _ => None,
    };
    let estimates = estimate_evaluated(&cfg, inputs.as_ref(), &plan, &evaluated, &cfg.targets)?;
    let model = format!("ingested {}", outputs.display());
    let report = EstimateReport {
        model,
        method: cfg.method,
        estimates,
    };
    emit_report(cli, &cfg, &report, out)
}

fn dispatch(cli: &Cli, out: &mut impl Write) -> Result<()> {
    match &cli.command {
        Cmd::Estimate => {
            let cfg = study_config(cli)?;
            let report = run_study(&cfg, &cli.out_dir.join("external"))?;
            emit_report(cli, &cfg, &report, out)
        }
        Cmd::Oracle { model } => cmd_oracle(cli, model, out),
        Cmd::Gca { n, degenerate } => cmd_gca(cli, *n, *degenerate, out),
        Cmd::Design => cmd_design(cli, out),
        Cmd::Ingest { design, outputs } => cmd_ingest(cli, design, outputs, out),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
/// Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if cli.threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(&cli, &mut out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
