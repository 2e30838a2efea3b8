use rand::Rng;
use rayon::prelude::*;

use super::{bootstrap_estimate, bootstrap_stats, population_variance, subsampling_estimate, CiMethod, CiOptions, Estimate, Method};
use crate::design::CvmDesign;
use crate::error::{Error, Result};
use crate::orthant::DominanceCounter;

/// Below this many `N^2 k` comparisons the double sum is evaluated directly.
const DIRECT_LIMIT: usize = 1 << 22;

/// Per `W_k`: how many pairs have both members `<= W_k`, and how many
/// `Z1_j`, `Z2_j` are `<= W_k` (componentwise for vector outputs).
struct Counts {
    both: Vec<usize>,
    first: Vec<usize>,
    second: Vec<usize>,
}

fn leq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn pair_max(d: &CvmDesign) -> Vec<f64> {
    d.z1.iter().zip(&d.z2).map(|(a, b)| a.max(*b)).collect()
}

fn counts_direct(d: &CvmDesign) -> Counts {
    let k = d.k;
    let per_w: Vec<(usize, usize, usize)> = d
        .w
        .par_chunks(k)
        .map(|w| {
            let (mut both, mut first, mut second) = (0, 0, 0);
            for (a, b) in d.z1.chunks(k).zip(d.z2.chunks(k)) {
                let ia = leq(a, w);
                let ib = leq(b, w);
                both += usize::from(ia && ib);
                first += usize::from(ia);
                second += usize::from(ib);
            }
            (both, first, second)
        })
        .collect();
    Counts {
        both: per_w.iter().map(|c| c.0).collect(),
        first: per_w.iter().map(|c| c.1).collect(),
        second: per_w.iter().map(|c| c.2).collect(),
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn counts_fast(d: &CvmDesign) -> Counts {
    if d.k == 1 {
        let m = sorted(&pair_max(d));
        let a = sorted(&d.z1);
        let b = sorted(&d.z2);
        let rank = |s: &[f64], w: f64| s.partition_point(|&v| v <= w);
        Counts {
            both: d.w.iter().map(|&w| rank(&m, w)).collect(),
            first: d.w.iter().map(|&w| rank(&a, w)).collect(),
            second: d.w.iter().map(|&w| rank(&b, w)).collect(),
        }
    } else if d.n * d.n * d.k <= DIRECT_LIMIT {
        counts_direct(d)
    } else {
        let count = |pts: &[f64]| DominanceCounter::new(pts, d.k).count_many(&d.w);
        Counts {
            both: count(&pair_max(d)),
            first: count(&d.z1),
            second: count(&d.z2),
        }
    }
}

fn assemble(c: &Counts, n: usize) -> f64 {
    let nf = n as f64;
    let mut total = 0.0;
    for i in 0..c.both.len() {
        let f = (c.first[i] + c.second[i]) as f64 / (2.0 * nf);
        total += c.both[i] as f64 / nf - f * f;
    }
    total / c.both.len() as f64
}

/// The Cramer-von Mises double sum, by sorting for scalar outputs and by
/// orthant counting for vector outputs. Equal, bit for bit, to
/// [`cvm_value_direct`].
pub fn cvm_value(design: &CvmDesign) -> f64 {
    assemble(&counts_fast(design), design.n)
}

/// The double sum evaluated term by term, `O(N^2 k)`.
pub fn cvm_value_direct(design: &CvmDesign) -> f64 {
    assemble(&counts_direct(design), design.n)
}

fn resampled(d: &CvmDesign, pairs: &[usize], ws: &[usize]) -> CvmDesign {
    let k = d.k;
    let pick = |src: &[f64], idx: &[usize]| -> Vec<f64> { idx.iter().flat_map(|&j| src[j * k..(j + 1) * k].iter().copied()).collect() };
    CvmDesign {
        frozen: d.frozen.clone(),
        n: pairs.len(),
        k,
        z1: pick(&d.z1, pairs),
        z2: pick(&d.z2, pairs),
        w: pick(&d.w, ws),
    }
}

/// Cramer-von Mises index estimate. Bootstrap resamples the `(Z1, Z2)`
/// pairs and the `W` sample independently.
pub fn cvm_estimate(design: &CvmDesign, opts: &CiOptions) -> Result<Estimate> {
    let n = design.n;
    if n < 2 {
        return Err(Error::InsufficientSample { needed: 2, got: n });
    }
    let value = cvm_value(design);
    let method = Method::Cvm;
    Ok(match opts.method {
        CiMethod::None => Estimate::point(method, value, n),
        CiMethod::Asymptotic => {
            let se = (cvm_variance_plugin(design)? / n as f64).sqrt();
            Estimate::normal(method, value, se, opts.level, n, CiMethod::Asymptotic)
        }
        CiMethod::Bootstrap => {
            let stats = bootstrap_stats(n, opts, 4, |pairs, rng| {
                let ws: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                cvm_value(&resampled(design, pairs, &ws))
            });
            bootstrap_estimate(method, value, n, &stats, opts.level)
        }
        CiMethod::Subsampling => subsampling_estimate(method, value, n, opts, |r| {
            let idx: Vec<usize> = r.collect();
            cvm_value(&resampled(design, &idx, &idx))
        }),
    })
}

/// Rescales a Cramer-von Mises estimate onto `[0, 1]`: by 4 in general, by
/// 6 for a continuous scalar output.
pub fn cvm_normalize(est: &Estimate, continuous_scalar: bool) -> Result<Estimate> {
    if est.method != Method::Cvm {
        return Err(Error::domain(format!("can only normalize a cvm estimate, got {}", est.method)));
    }
    let factor: u32 = if continuous_scalar { 6 } else { 4 };
    let f = f64::from(factor);
    Ok(Estimate {
        method: Method::CvmNormalized(factor),
        value: est.value * f,
        std_error: est.std_error * f,
        ci_low: est.ci_low * f,
        ci_high: est.ci_high * f,
        ..est.clone()
    })
}

/// Plug-in limiting variance `Var U + Var V` of `sqrt(N) (D_N - D)`, where
/// `U = G(W) - F(W)^2` over the `W` sample and
/// `V = E_W[1{Z1 <= W, Z2 <= W} - F(W) (1{Z1 <= W} + 1{Z2 <= W})]` over the
/// pairs, with `F` the empirical law of `W` and `G` that of the pair maxima.
pub fn cvm_variance_plugin(design: &CvmDesign) -> Result<f64> {
    let n = design.n;
    if n < 10 {
        return Err(Error::InsufficientSample { needed: 10, got: n });
    }
    let nf = n as f64;
    let (u, v): (Vec<f64>, Vec<f64>) = if design.k == 1 {
        let ws = sorted(&design.w);
        let m = pair_max(design);
        let ms = sorted(&m);
        let f_at = |t: f64| ws.partition_point(|&w| w <= t) as f64 / nf;
        let u = design
            .w
            .iter()
            .map(|&w| {
                let g = ms.partition_point(|&x| x <= w) as f64 / nf;
                let f = f_at(w);
                g - f * f
            })
            .collect();
        // suffix[i] = sum of F(ws[i']) over i' >= i
        let mut suffix = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + f_at(ws[i]);
        }
        let above = |z: f64| ws.partition_point(|&w| w < z);
        let v = (0..n)
            .map(|j| {
                let count = (n - above(m[j])) as f64;
                let weighted = suffix[above(design.z1[j])] + suffix[above(design.z2[j])];
                (count - weighted) / nf
            })
            .collect();
        (u, v)
    } else {
        let k = design.k;
        let m = pair_max(design);
        let wrows: Vec<&[f64]> = design.w.chunks(k).collect();
        let f: Vec<f64> = wrows
            .par_iter()
            .map(|w| wrows.iter().filter(|x| leq(x, w)).count() as f64 / nf)
            .collect();
        let u = wrows
            .par_iter()
            .zip(&f)
            .map(|(w, fw)| m.chunks(k).filter(|x| leq(x, w)).count() as f64 / nf - fw * fw)
            .collect();
        let v = (0..n)
            .into_par_iter()
            .map(|j| {
                let (mj, a, b) = (&m[j * k..(j + 1) * k], &design.z1[j * k..(j + 1) * k], &design.z2[j * k..(j + 1) * k]);
                let mut acc = 0.0;
                for (w, fw) in wrows.iter().zip(&f) {
                    let ind = |x: &[f64]| if leq(x, w) { 1.0 } else { 0.0 };
                    acc += ind(mj) - fw * (ind(a) + ind(b));
                }
                acc / nf
            })
            .collect();
        (u, v)
    };
    Ok(population_variance(&u) + population_variance(&v))
}
