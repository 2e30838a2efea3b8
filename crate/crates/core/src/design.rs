//! Pick-and-Freeze designs of experiment.
//!
//! A [`DesignPlan`] holds the input points of a design; evaluating it with a
//! [`Model`] (or attaching outputs produced elsewhere) yields either a
//! [`PickFreezeDesign`] or a [`CvmDesign`].
//!
//! Cells are laid out block-major: the `p` Pick-and-Freeze replicates of
//! block 0, then block 1, and so on; the independent `W` sample, when
//! present, follows with one cell per block. All indices are 0-based.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::distributions::InputModel;
use crate::error::{CellKey, Error, Result};
use crate::rng::{Purpose, Stream};

/// A deterministic map from `d` inputs to `k` outputs.
pub trait Model: Sync {
    fn output_dim(&self) -> usize;

    /// Writes `output_dim()` values into `out`.
    fn eval(&self, x: &[f64], out: &mut [f64]) -> std::result::Result<(), String>;
}

impl<M: Model + ?Sized> Model for &M {
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> std::result::Result<(), String> {
        (**self).eval(x, out)
    }
}

/// Scalar model from a closure.
pub struct FnModel<F>(pub F);

impl<F> Model for FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn output_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> std::result::Result<(), String> {
        out[0] = (self.0)(x);
        Ok(())
    }
}

/// Vector-valued model from a closure.
pub struct VecFnModel<F> {
    pub k: usize,
    pub f: F,
}

impl<F> Model for VecFnModel<F>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    fn output_dim(&self) -> usize {
        self.k
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> std::result::Result<(), String> {
        (self.f)(x, out);
        Ok(())
    }
}

/// `pf` for Pick-and-Freeze cells, `w` for the independent sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    PickFreeze,
    Independent,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::PickFreeze => "pf",
            Role::Independent => "w",
        })
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pf" => Ok(Role::PickFreeze),
            "w" => Ok(Role::Independent),
            other => Err(format!("unknown role `{other}`, expected pf or w")),
        }
    }
}

/// Input points of a design, not yet evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPlan {
    /// Frozen input indices, 0-based, sorted.
    pub frozen: Vec<usize>,
    pub p: usize,
    pub n: usize,
    /// Whether the plan carries the independent `W` sample.
    pub with_w: bool,
    pub input_names: Vec<String>,
    /// `cell_count() * d` values, row per cell.
    pub x: Vec<f64>,
}

fn check_frozen(inputs: &InputModel, v: &[usize]) -> Result<Vec<usize>> {
    if v.is_empty() {
        return Err(Error::domain("the frozen index set is empty"));
    }
    let mut frozen = v.to_vec();
    frozen.sort_unstable();
    frozen.dedup();
    if frozen.len() != v.len() {
        return Err(Error::domain(format!("repeated index in frozen set {v:?}")));
    }
    if let Some(&bad) = frozen.iter().find(|&&i| i >= inputs.dim()) {
        return Err(Error::domain(format!(
            "input index {bad} out of range for {} inputs",
            inputs.dim()
        )));
    }
    Ok(frozen)
}

fn draw_one(inputs: &InputModel, stream: Stream) -> f64 {
    let mut rng = stream.rng();
    inputs.distribution(stream.input_index as usize).draw(&mut rng)
}

impl DesignPlan {
    /// Order-`p` Pick-and-Freeze plan with the inputs in `v` frozen.
    pub fn pickfreeze(inputs: &InputModel, v: &[usize], p: usize, n: usize, seed: u64) -> Result<Self> {
        if p < 2 {
            return Err(Error::domain(format!("replicate count must be at least 2, got {p}")));
        }
        if n < 2 {
            return Err(Error::InsufficientSample { needed: 2, got: n });
        }
        Self::build(inputs, v, p, n, seed, false)
    }

    /// Three-sample plan: a Pick-and-Freeze pair plus an independent sample.
    pub fn cvm(inputs: &InputModel, v: &[usize], n: usize, seed: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InsufficientSample { needed: 1, got: n });
        }
        Self::build(inputs, v, 2, n, seed, true)
    }

    /// `n` i.i.d. rows as `W` cells, drawn from the same streams as [`iid_sample`].
    pub fn sample(inputs: &InputModel, n: usize, seed: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InsufficientSample { needed: 1, got: n });
        }
        let x = iid_sample(inputs, n, seed)?;
        Ok(DesignPlan {
            frozen: Vec::new(),
            p: 0,
            n,
            with_w: true,
            input_names: inputs.names().map(str::to_owned).collect(),
            x,
        })
    }

    fn build(inputs: &InputModel, v: &[usize], p: usize, n: usize, seed: u64, with_w: bool) -> Result<Self> {
        for inp in inputs.inputs() {
            inp.distribution.validate()?;
        }
        let frozen = check_frozen(inputs, v)?;
        let d = inputs.dim();
        let mut is_frozen = vec![false; d];
        for &i in &frozen {
            is_frozen[i] = true;
        }
        let pf_cells = p * n;
        let cells = pf_cells + if with_w { n } else { 0 };
        let mut x = vec![0.0; cells * d];
        x.par_chunks_mut(d).enumerate().for_each(|(cell, row)| {
            if cell < pf_cells {
                let (block, rep) = (cell / p, cell % p);
                for (i, slot) in row.iter_mut().enumerate() {
                    let s = if is_frozen[i] {
                        Stream::new(seed, Purpose::Frozen).input(i).block(block)
                    } else {
                        Stream::new(seed, Purpose::Replicate)
                            .input(i)
                            .replicate(rep)
                            .block(block)
                    };
                    *slot = draw_one(inputs, s);
                }
            } else {
                let block = cell - pf_cells;
                for (i, slot) in row.iter_mut().enumerate() {
                    *slot = draw_one(inputs, Stream::new(seed, Purpose::Independent).input(i).block(block));
                }
            }
        });
        Ok(DesignPlan {
            frozen,
            p,
            n,
            with_w,
            input_names: inputs.names().map(str::to_owned).collect(),
            x,
        })
    }

    pub fn dim(&self) -> usize {
        self.input_names.len()
    }

    pub fn cell_count(&self) -> usize {
        self.p * self.n + if self.with_w { self.n } else { 0 }
    }

    pub fn key(&self, cell: usize) -> CellKey {
        let pf = self.p * self.n;
        if cell < pf {
            CellKey {
                block: cell / self.p,
                replicate: cell % self.p,
                role: Role::PickFreeze,
            }
        } else {
            CellKey {
                block: cell - pf,
                replicate: 0,
                role: Role::Independent,
            }
        }
    }

    pub fn index_of(&self, key: CellKey) -> Option<usize> {
        match key.role {
            Role::PickFreeze if key.block < self.n && key.replicate < self.p => {
                Some(key.block * self.p + key.replicate)
            }
            Role::Independent if self.with_w && key.block < self.n && key.replicate == 0 => {
                Some(self.p * self.n + key.block)
            }
            _ => None,
        }
    }

    pub fn input(&self, cell: usize) -> &[f64] {
        let d = self.dim();
        &self.x[cell * d..(cell + 1) * d]
    }

    /// Evaluates every cell, `p * N` (plus `N` for `W`) model calls.
    pub fn evaluate<M: Model + ?Sized>(&self, model: &M) -> Result<Outputs> {
        let k = model.output_dim();
        if k == 0 {
            return Err(Error::domain("model output dimension must be at least 1"));
        }
        let d = self.dim();
        let mut y = vec![0.0; self.cell_count() * k];
        let failures: Vec<(usize, String)> = y
            .par_chunks_mut(k)
            .enumerate()
            .filter_map(|(cell, out)| {
                model
                    .eval(&self.x[cell * d..(cell + 1) * d], out)
                    .err()
                    .map(|m| (cell, m))
            })
            .collect();
        if let Some((cell, message)) = failures.into_iter().next() {
            return Err(Error::Model {
                at: self.key(cell),
                message,
            });
        }
        Ok(Outputs { k, y })
    }

    /// Writes `block,replicate,role,<input names...>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["block".to_owned(), "replicate".into(), "role".into()];
        header.extend(self.input_names.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for cell in 0..self.cell_count() {
            w.write_record(key_fields(self.key(cell)).into_iter().chain(self.input(cell).iter().map(|v| fmt_f64(*v))))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<design csv>", e))?;
        Ok(())
    }

    /// Reads outputs in the `block,replicate,role,<y1..yk>` format. Rows may
    /// come in any order but must cover every cell exactly once.
    pub fn read_outputs<R: Read>(&self, input: R) -> Result<Outputs> {
        let table = read_keyed_table(input)?;
        let k = table.columns.len();
        if k == 0 {
            return Err(Error::Protocol("output file has no value columns".into()));
        }
        let mut slots: Vec<Option<usize>> = vec![None; self.cell_count()];
        for (row, key) in table.keys.iter().enumerate() {
            let Some(cell) = self.index_of(*key) else {
                return Err(Error::Protocol(format!("unexpected row for {key}")));
            };
            if slots[cell].replace(row).is_some() {
                return Err(Error::Protocol(format!("duplicate row for {key}")));
            }
        }
        if let Some(cell) = slots.iter().position(Option::is_none) {
            return Err(Error::Protocol(format!(
                "missing row for {} ({} rows expected, {} found)",
                self.key(cell),
                self.cell_count(),
                table.keys.len()
            )));
        }
        let mut y = Vec::with_capacity(self.cell_count() * k);
        for row in slots.into_iter().flatten() {
            y.extend_from_slice(&table.values[row * k..(row + 1) * k]);
        }
        Ok(Outputs { k, y })
    }

    /// Reads a plan back from its CSV form. Sizes and the frozen set are
    /// inferred from the keys and from which columns repeat within blocks.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let table = read_keyed_table(input)?;
        let d = table.columns.len();
        let pf: Vec<&CellKey> = table.keys.iter().filter(|k| k.role == Role::PickFreeze).collect();
        let n_w = table
            .keys
            .iter()
            .filter(|k| k.role == Role::Independent)
            .map(|k| k.block + 1)
            .max();
        let with_w = n_w.is_some();
        let (p, n) = if pf.is_empty() {
            (0, n_w.unwrap_or(0))
        } else {
            let p = pf.iter().map(|k| k.replicate + 1).max().unwrap_or(0);
            if p < 2 {
                return Err(Error::Protocol("pick-freeze rows need at least 2 replicates".into()));
            }
            (p, pf.iter().map(|k| k.block + 1).max().unwrap_or(0))
        };
        let mut plan = DesignPlan {
            frozen: Vec::new(),
            p,
            n,
            with_w,
            input_names: table.columns,
            x: vec![f64::NAN; 0],
        };
        if table.keys.len() != plan.cell_count() {
            return Err(Error::Protocol(format!(
                "design has {} rows, expected {}",
                table.keys.len(),
                plan.cell_count()
            )));
        }
        let mut x = vec![f64::NAN; plan.cell_count() * d];
        let mut seen = vec![false; plan.cell_count()];
        for (row, key) in table.keys.iter().enumerate() {
            let cell = plan
                .index_of(*key)
                .filter(|&c| !seen[c])
                .ok_or_else(|| Error::Protocol(format!("unexpected or duplicate row for {key}")))?;
            seen[cell] = true;
            x[cell * d..(cell + 1) * d].copy_from_slice(&table.values[row * d..(row + 1) * d]);
        }
        plan.x = x;
        plan.frozen = (0..d)
            .filter(|_| p >= 2)
            .filter(|&i| {
                (0..n).all(|b| {
                    let first = plan.x[(b * p) * d + i];
                    (1..p).all(|r| plan.x[(b * p + r) * d + i].to_bits() == first.to_bits())
                })
            })
            .collect();
        Ok(plan)
    }

    pub fn attach(&self, outputs: Outputs) -> Result<Evaluated> {
        if outputs.y.len() != self.cell_count() * outputs.k {
            return Err(Error::Protocol(format!(
                "{} output values for {} cells of dimension {}",
                outputs.y.len(),
                self.cell_count(),
                outputs.k
            )));
        }
        let Outputs { k, y } = outputs;
        if self.p == 0 {
            Ok(Evaluated::Sample { k, y })
        } else if self.with_w {
            let (pf, w) = y.split_at(2 * self.n * k);
            let mut z1 = Vec::with_capacity(self.n * k);
            let mut z2 = Vec::with_capacity(self.n * k);
            for block in pf.chunks(2 * k) {
                z1.extend_from_slice(&block[..k]);
                z2.extend_from_slice(&block[k..]);
            }
            Ok(Evaluated::Cvm(CvmDesign {
                frozen: self.frozen.clone(),
                n: self.n,
                k,
                z1,
                z2,
                w: w.to_vec(),
            }))
        } else {
            Ok(Evaluated::PickFreeze(PickFreezeDesign {
                frozen: self.frozen.clone(),
                p: self.p,
                n: self.n,
                k,
                y,
            }))
        }
    }
}

fn key_fields(key: CellKey) -> [String; 3] {
    [key.block.to_string(), key.replicate.to_string(), key.role.to_string()]
}

/// Shortest decimal that reads back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse {
        location: e
            .position()
            .map(|p| format!("line {}", p.record() + 1))
            .unwrap_or_else(|| "csv".into()),
        message: e.to_string(),
    }
}

struct KeyedTable {
    columns: Vec<String>,
    keys: Vec<CellKey>,
    values: Vec<f64>,
}

fn read_keyed_table<R: Read>(input: R) -> Result<KeyedTable> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let fields: Vec<&str> = header.iter().collect();
    if fields.len() < 3 || fields[..3] != ["block", "replicate", "role"] {
        return Err(Error::Parse {
            location: "line 1".into(),
            message: format!("header must start with block,replicate,role, got {}", fields.join(",")),
        });
    }
    let columns: Vec<String> = fields[3..].iter().map(|s| s.to_string()).collect();
    let mut keys = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.record() + 1).unwrap_or(0);
        let at = |col: &str| format!("line {line}, column {col}");
        let int = |i: usize, col: &str| -> Result<usize> {
            rec[i].parse().map_err(|_| Error::Parse {
                location: at(col),
                message: format!("`{}` is not a non-negative integer", &rec[i]),
            })
        };
        let block = int(0, "block")?;
        let replicate = int(1, "replicate")?;
        let role = rec[2].parse().map_err(|m| Error::Parse {
            location: at("role"),
            message: m,
        })?;
        keys.push(CellKey { block, replicate, role });
        for (j, col) in columns.iter().enumerate() {
            let cell = &rec[3 + j];
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                location: at(col),
                message: format!("`{cell}` is not a number"),
            })?;
            values.push(v);
        }
    }
    Ok(KeyedTable { columns, keys, values })
}

/// Model outputs in cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub k: usize,
    pub y: Vec<f64>,
}

impl Outputs {
    pub fn write_csv<W: Write>(&self, plan: &DesignPlan, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["block".to_owned(), "replicate".into(), "role".into()];
        header.extend((1..=self.k).map(|c| format!("y{c}")));
        w.write_record(&header).map_err(csv_err)?;
        for (cell, vals) in self.y.chunks(self.k).enumerate() {
            w.write_record(key_fields(plan.key(cell)).into_iter().chain(vals.iter().map(|v| fmt_f64(*v))))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<output csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluated {
    PickFreeze(PickFreezeDesign),
    Cvm(CvmDesign),
    /// Outputs of an i.i.d. sample plan, row per draw.
    Sample { k: usize, y: Vec<f64> },
}

/// `p x N` outputs with the inputs in `frozen` shared inside each block.
#[derive(Debug, Clone, PartialEq)]
pub struct PickFreezeDesign {
    pub frozen: Vec<usize>,
    pub p: usize,
    pub n: usize,
    pub k: usize,
    /// Block-major: `y[((block * p) + replicate) * k + component]`.
    pub y: Vec<f64>,
}

impl PickFreezeDesign {
    /// Scalar design from replicate columns, `columns[i][j]` = replicate `i`
    /// of block `j`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if p < 1 || columns.iter().any(|c| c.len() != n) {
            return Err(Error::domain("replicate columns must be nonempty and of equal length"));
        }
        let mut y = Vec::with_capacity(p * n);
        for j in 0..n {
            y.extend(columns.iter().map(|c| c[j]));
        }
        Ok(PickFreezeDesign {
            frozen: Vec::new(),
            p,
            n,
            k: 1,
            y,
        })
    }

    pub fn get(&self, block: usize, replicate: usize, component: usize) -> f64 {
        self.y[(block * self.p + replicate) * self.k + component]
    }

    pub fn output(&self, block: usize, replicate: usize) -> &[f64] {
        let at = (block * self.p + replicate) * self.k;
        &self.y[at..at + self.k]
    }

    /// Scalar component as `p` replicate columns of length `N`.
    pub fn columns(&self, component: usize) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|i| (0..self.n).map(|j| self.get(j, i, component)).collect())
            .collect()
    }

    /// Scalar component, block-major (`p` values per block).
    pub fn component(&self, component: usize) -> Result<Vec<f64>> {
        if component >= self.k {
            return Err(Error::domain(format!(
                "component {component} out of range for {} outputs",
                self.k
            )));
        }
        Ok(self.y.iter().skip(component).step_by(self.k).copied().collect())
    }
}

/// The three-sample design: pair `(Z1, Z2)` sharing the frozen inputs and an
/// independent sample `W`. Each is `N * k` values, row per block.
#[derive(Debug, Clone, PartialEq)]
pub struct CvmDesign {
    pub frozen: Vec<usize>,
    pub n: usize,
    pub k: usize,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub w: Vec<f64>,
}

impl CvmDesign {
    pub fn scalar(z1: Vec<f64>, z2: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        Self::from_rows(1, z1, z2, w)
    }

    pub fn from_rows(k: usize, z1: Vec<f64>, z2: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if k == 0 || z1.is_empty() || !z1.len().is_multiple_of(k) || z1.len() != z2.len() || z1.len() != w.len() {
            return Err(Error::domain("Z1, Z2 and W must have the same nonzero number of k-rows"));
        }
        Ok(CvmDesign {
            frozen: Vec::new(),
            n: z1.len() / k,
            k,
            z1,
            z2,
            w,
        })
    }

    /// The `(Z1, Z2)` pair as an order-2 Pick-and-Freeze design.
    pub fn pair(&self) -> PickFreezeDesign {
        let mut y = Vec::with_capacity(2 * self.n * self.k);
        for (a, b) in self.z1.chunks(self.k).zip(self.z2.chunks(self.k)) {
            y.extend_from_slice(a);
            y.extend_from_slice(b);
        }
        PickFreezeDesign {
            frozen: self.frozen.clone(),
            p: 2,
            n: self.n,
            k: self.k,
            y,
        }
    }

    /// Applies `f` to every output value of all three samples.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        CvmDesign {
            z1: self.z1.iter().map(|&v| f(v)).collect(),
            z2: self.z2.iter().map(|&v| f(v)).collect(),
            w: self.w.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }
}

/// `n` i.i.d. input rows; value `(j, i)` comes from its own stream
/// `(seed, Sample, input i, block j)`.
pub fn iid_sample(inputs: &InputModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    for inp in inputs.inputs() {
        inp.distribution.validate()?;
    }
    let d = inputs.dim();
    let mut x = vec![0.0; n * d];
    x.par_chunks_mut(d).enumerate().for_each(|(j, row)| {
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = draw_one(inputs, Stream::new(seed, Purpose::Sample).input(i).block(j));
        }
    });
    Ok(x)
}

/// Evaluates `model` on input rows, in row order.
pub fn evaluate_rows<M: Model + ?Sized>(model: &M, x: &[f64], d: usize) -> Result<Vec<f64>> {
    let k = model.output_dim();
    let mut y = vec![0.0; (x.len() / d) * k];
    let failures: Vec<(usize, String)> = y
        .par_chunks_mut(k)
        .enumerate()
        .filter_map(|(j, out)| model.eval(&x[j * d..(j + 1) * d], out).err().map(|m| (j, m)))
        .collect();
    if let Some((j, message)) = failures.into_iter().next() {
        return Err(Error::Model {
            at: CellKey {
                block: j,
                replicate: 0,
                role: Role::Independent,
            },
            message,
        });
    }
    Ok(y)
}

/// Evaluates an order-`p` Pick-and-Freeze design.
pub fn build_pickfreeze<M: Model + ?Sized>(
    model: &M,
    inputs: &InputModel,
    v: &[usize],
    p: usize,
    n: usize,
    seed: u64,
) -> Result<PickFreezeDesign> {
    let plan = DesignPlan::pickfreeze(inputs, v, p, n, seed)?;
    match plan.attach(plan.evaluate(model)?)? {
        Evaluated::PickFreeze(d) => Ok(d),
        _ => unreachable!("plan has no W sample"),
    }
}

/// Evaluates the three-sample Cramer-von Mises design.
pub fn build_cvm_design<M: Model + ?Sized>(
    model: &M,
    inputs: &InputModel,
    v: &[usize],
    n: usize,
    seed: u64,
) -> Result<CvmDesign> {
    let plan = DesignPlan::cvm(inputs, v, n, seed)?;
    match plan.attach(plan.evaluate(model)?)? {
        Evaluated::Cvm(d) => Ok(d),
        _ => unreachable!("plan is a three-sample design"),
    }
}

/// 1-based input indices to the 0-based form used internally.
pub fn zero_based(v: &[usize]) -> Result<Vec<usize>> {
    v.iter()
        .map(|&i| {
            i.checked_sub(1)
                .ok_or_else(|| Error::domain("input indices are 1-based; got 0"))
        })
        .collect()
}
