//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SUBDIVISIONS: usize = 5_000;

/// Integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval(f64, f64),
    /// `[a, +inf)`
    UpperHalfLine(f64),
    /// `(-inf, b]`
    LowerHalfLine(f64),
    RealLine,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` to absolute error `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let (v0, e0) = kronrod(&f, a, b);
    let mut pieces = vec![(a, b, v0, e0)];
    let mut total_err = e0;
    let mut subdivisions = 0;
    while total_err > tol {
        if subdivisions >= MAX_SUBDIVISIONS {
            return Err(Error::Tolerance {
                tol,
                estimate: total_err,
            });
        }
        // split the piece with the largest error estimate
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one piece");
        let (lo, hi, _, err) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            return Err(Error::Tolerance {
                tol,
                estimate: total_err,
            });
        }
        let (vl, el) = kronrod(&f, lo, mid);
        let (vr, er) = kronrod(&f, mid, hi);
        total_err += el + er - err;
        pieces.push((lo, mid, vl, el));
        pieces.push((mid, hi, vr, er));
        subdivisions += 1;
    }
    let value: f64 = pieces.iter().map(|p| p.2).sum();
    if !value.is_finite() {
        return Err(Error::domain("integrand is not finite on the domain"));
    }
    Ok(value)
}

/// Integrates over a possibly infinite domain; infinite ends are mapped onto
/// a finite interval by `x = t / (1 - t^2)` or `x = a + t / (1 - t)`.
pub fn integrate_domain<F: Fn(f64) -> f64>(f: F, domain: Domain, tol: f64) -> Result<f64> {
    match domain {
        Domain::Interval(a, b) => integrate(f, a, b, tol),
        Domain::UpperHalfLine(a) => integrate(
            |t: f64| {
                let s = 1.0 - t;
                let x = a + t / s;
                guard(f(x) / (s * s))
            },
            0.0,
            1.0,
            tol,
        ),
        Domain::LowerHalfLine(b) => integrate(
            |t: f64| {
                let s = 1.0 - t;
                let x = b - t / s;
                guard(f(x) / (s * s))
            },
            0.0,
            1.0,
            tol,
        ),
        Domain::RealLine => integrate(
            |t: f64| {
                let s = 1.0 - t * t;
                let x = t / s;
                guard(f(x) * (1.0 + t * t) / (s * s))
            },
            -1.0,
            1.0,
            tol,
        ),
    }
}

// endpoints of the mapped interval are never sampled by Gauss-Kronrod, but
// the integrand can still overflow to inf * 0 very close to them
fn guard(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v
    }
}
