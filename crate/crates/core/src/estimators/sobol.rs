use super::{bootstrap_estimate, bootstrap_stats, population_variance, subsampling_estimate, CiMethod, CiOptions, Estimate, Method};
use crate::design::PickFreezeDesign;
use crate::error::{Error, Result};

/// Pair moments of one output component over a set of blocks, after
/// subtracting `shift`: `a = mean(Y Y')`, `m = mean((Y + Y') / 2)`,
/// `b = mean((Y^2 + Y'^2) / 2)`.
#[derive(Debug, Clone, Copy)]
struct PairMoments {
    a: f64,
    m: f64,
    b: f64,
}

impl PairMoments {
    fn numerator(&self) -> f64 {
        self.a - self.m * self.m
    }

    fn variance(&self) -> f64 {
        self.b - self.m * self.m
    }
}

fn check_pair(design: &PickFreezeDesign) -> Result<()> {
    if design.p != 2 {
        return Err(Error::domain(format!(
            "Pick-and-Freeze Sobol estimation needs p = 2, got {}",
            design.p
        )));
    }
    if design.n < 2 {
        return Err(Error::InsufficientSample { needed: 2, got: design.n });
    }
    Ok(())
}

/// The smaller output of block 0; subtracting it keeps the products well
/// scaled and makes constant outputs cancel exactly.
fn shift(design: &PickFreezeDesign, c: usize) -> f64 {
    design.get(0, 0, c).min(design.get(0, 1, c))
}

fn moments(design: &PickFreezeDesign, c: usize, s: f64, blocks: impl Iterator<Item = usize>) -> PairMoments {
    let (mut a, mut m, mut b, mut n) = (0.0, 0.0, 0.0, 0usize);
    for j in blocks {
        let y = design.get(j, 0, c) - s;
        let z = design.get(j, 1, c) - s;
        a += y * z;
        m += y + z;
        b += y * y + z * z;
        n += 1;
    }
    let n = n as f64;
    PairMoments {
        a: a / n,
        m: m / (2.0 * n),
        b: b / (2.0 * n),
    }
}

/// Pick-and-Freeze estimate of `Var E[Y_c | X_v]`, or of the ratio to the
/// pooled variance when `ratio` is set.
pub fn sobol_classic(design: &PickFreezeDesign, component: usize, ratio: bool, opts: &CiOptions) -> Result<Estimate> {
    check_pair(design)?;
    if component >= design.k {
        return Err(Error::domain(format!("component {component} out of range for {} outputs", design.k)));
    }
    let method = if ratio { Method::SobolRatio } else { Method::SobolClassic };
    let s = shift(design, component);
    let stat = |blocks: &mut dyn Iterator<Item = usize>| -> f64 {
        let mo = moments(design, component, s, blocks);
        if ratio {
            mo.numerator() / mo.variance()
        } else {
            mo.numerator()
        }
    };
    let full = moments(design, component, s, 0..design.n);
    if ratio && !(full.variance() > 0.0) {
        return Err(Error::DegenerateOutput(format!("output component {component} has zero variance")));
    }
    let value = stat(&mut (0..design.n));
    let n = design.n;
    Ok(match opts.method {
        CiMethod::None => Estimate::point(method, value, n),
        CiMethod::Bootstrap => {
            let stats = bootstrap_stats(n, opts, 1, |idx, _| stat(&mut idx.iter().copied()));
            bootstrap_estimate(method, value, n, &stats, opts.level)
        }
        CiMethod::Subsampling => subsampling_estimate(method, value, n, opts, |r| stat(&mut r.into_iter())),
        CiMethod::Asymptotic => {
            let phi: Vec<f64> = if ratio {
                sobol_ratio_influence(design, &[component], &[s], &[full], value)
            } else {
                (0..n)
                    .map(|j| {
                        let y = design.get(j, 0, component) - s;
                        let z = design.get(j, 1, component) - s;
                        y * z - full.m * (y + z)
                    })
                    .collect()
            };
            let se = (population_variance(&phi) / n as f64).sqrt();
            Estimate::normal(method, value, se, opts.level, n, CiMethod::Asymptotic)
        }
    })
}

/// Per-block influence values of `S = sum_c H_c / sum_c V_c`.
fn sobol_ratio_influence(design: &PickFreezeDesign, comps: &[usize], shifts: &[f64], mo: &[PairMoments], s_value: f64) -> Vec<f64> {
    let total_var: f64 = mo.iter().map(PairMoments::variance).sum();
    (0..design.n)
        .map(|j| {
            comps
                .iter()
                .zip(shifts)
                .zip(mo)
                .map(|((&c, &sh), m)| {
                    let y = design.get(j, 0, c) - sh;
                    let z = design.get(j, 1, c) - sh;
                    y * z - s_value * (y * y + z * z) / 2.0 - 2.0 * m.m * (1.0 - s_value) * (y + z) / 2.0
                })
                .sum::<f64>()
                / total_var
        })
        .collect()
}

/// Trace-aggregated Sobol index of a vector output:
/// `sum_c Var E[Y_c | X_v] / sum_c Var Y_c`.
pub fn multivariate_sobol(design: &PickFreezeDesign, opts: &CiOptions) -> Result<Estimate> {
    check_pair(design)?;
    let comps: Vec<usize> = (0..design.k).collect();
    let shifts: Vec<f64> = comps.iter().map(|&c| shift(design, c)).collect();
    let stat = |blocks: &[usize]| -> f64 {
        let (mut h, mut v) = (0.0, 0.0);
        for (&c, &s) in comps.iter().zip(&shifts) {
            let mo = moments(design, c, s, blocks.iter().copied());
            h += mo.numerator();
            v += mo.variance();
        }
        h / v
    };
    let full: Vec<PairMoments> = comps.iter().zip(&shifts).map(|(&c, &s)| moments(design, c, s, 0..design.n)).collect();
    if !(full.iter().map(PairMoments::variance).sum::<f64>() > 0.0) {
        return Err(Error::DegenerateOutput("all output components have zero variance".into()));
    }
    let n = design.n;
    let value = stat(&(0..n).collect::<Vec<_>>());
    let method = Method::MultivariateSobol;
    Ok(match opts.method {
        CiMethod::None => Estimate::point(method, value, n),
        CiMethod::Bootstrap => {
            let stats = bootstrap_stats(n, opts, 2, |idx, _| stat(idx));
            bootstrap_estimate(method, value, n, &stats, opts.level)
        }
        CiMethod::Subsampling => subsampling_estimate(method, value, n, opts, |r| stat(&r.collect::<Vec<_>>())),
        CiMethod::Asymptotic => {
            let phi = sobol_ratio_influence(design, &comps, &shifts, &full, value);
            let se = (population_variance(&phi) / n as f64).sqrt();
            Estimate::normal(method, value, se, opts.level, n, CiMethod::Asymptotic)
        }
    })
}
