use super::{bootstrap_estimate, bootstrap_stats, subsampling_estimate, CiMethod, CiOptions, Estimate, Method};
use crate::analytic::binomial;
use crate::design::PickFreezeDesign;
use crate::error::{Error, Result};

/// Largest supported replicate count.
pub const MAX_ORDER: usize = 12;

/// Block averages of the symmetric products: `pbar[l]` is the mean over
/// blocks of the average product of `l` distinct replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricProducts {
    pub p: usize,
    pub pbar: Vec<f64>,
}

fn check(design: &PickFreezeDesign, component: usize) -> Result<()> {
    if design.p > MAX_ORDER {
        return Err(Error::OrderLimit {
            order: design.p,
            limit: MAX_ORDER,
        });
    }
    if design.p < 2 {
        return Err(Error::domain(format!("order must be at least 2, got {}", design.p)));
    }
    if component >= design.k {
        return Err(Error::domain(format!("component {component} out of range for {} outputs", design.k)));
    }
    Ok(())
}

/// Per-block symmetric means, `N` rows of `p + 1` values. Replicates are
/// sorted before accumulation so the result does not depend on their order.
fn block_products(design: &PickFreezeDesign, component: usize, shift: f64) -> Vec<f64> {
    let p = design.p;
    let scale: Vec<f64> = (0..=p).map(|l| binomial(p as u32, l as u32)).collect();
    let mut out = Vec::with_capacity(design.n * (p + 1));
    let mut ys = vec![0.0; p];
    let mut e = vec![0.0; p + 1];
    for j in 0..design.n {
        for (i, y) in ys.iter_mut().enumerate() {
            *y = design.get(j, i, component) - shift;
        }
        ys.sort_by(f64::total_cmp);
        e.fill(0.0);
        e[0] = 1.0;
        for (i, &y) in ys.iter().enumerate() {
            for l in (1..=i + 1).rev() {
                e[l] += e[l - 1] * y;
            }
        }
        out.extend(e.iter().zip(&scale).map(|(v, s)| v / s));
    }
    out
}

fn averages(products: &[f64], p: usize, blocks: impl Iterator<Item = usize>) -> Vec<f64> {
    let mut sum = vec![0.0; p + 1];
    let mut n = 0usize;
    for j in blocks {
        for (s, v) in sum.iter_mut().zip(&products[j * (p + 1)..(j + 1) * (p + 1)]) {
            *s += v;
        }
        n += 1;
    }
    sum.iter().map(|s| s / n as f64).collect()
}

/// `pbar[l]` for `l = 0..=p`, with `pbar[0] = 1`.
pub fn symmetric_products(design: &PickFreezeDesign, component: usize) -> Result<SymmetricProducts> {
    check(design, component)?;
    let products = block_products(design, component, 0.0);
    Ok(SymmetricProducts {
        p: design.p,
        pbar: averages(&products, design.p, 0..design.n),
    })
}

/// `sum_l C(p, l) (-pbar_1)^(p - l) pbar_l`.
pub fn hsobol_value(sp: &SymmetricProducts) -> f64 {
    let p = sp.p;
    let m = sp.pbar[1];
    (0..=p)
        .map(|l| binomial(p as u32, l as u32) * (-m).powi((p - l) as i32) * sp.pbar[l])
        .sum()
}

/// The index is translation invariant, so outputs are first shifted by the
/// smallest value of block 0.
fn shift(design: &PickFreezeDesign, component: usize) -> f64 {
    (0..design.p)
        .map(|i| design.get(0, i, component))
        .fold(f64::INFINITY, f64::min)
}

fn gradient(pbar: &[f64]) -> Vec<f64> {
    let p = pbar.len() - 1;
    let m = pbar[1];
    let sign = |e: usize| if e.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut b = vec![0.0; p + 1];
    b[1] = sign(p - 1) * (p * (p - 1)) as f64 * m.powi(p as i32 - 1)
        + (2..p)
            .map(|l| binomial(p as u32, l as u32) * sign(p - l) * (p - l) as f64 * m.powi((p - l - 1) as i32) * pbar[l])
            .sum::<f64>();
    for l in 2..=p {
        b[l] = binomial(p as u32, l as u32) * sign(p - l) * m.powi((p - l) as i32);
    }
    b
}

/// Plug-in asymptotic variance of `sqrt(N) (H_N - H)`: the gradient of the
/// estimator in the block averages, against their empirical covariance.
pub fn hsobol_variance(design: &PickFreezeDesign, component: usize) -> Result<f64> {
    check(design, component)?;
    let s = shift(design, component);
    let products = block_products(design, component, s);
    Ok(variance_from_products(&products, design.p, design.n))
}

fn variance_from_products(products: &[f64], p: usize, n: usize) -> f64 {
    let pbar = averages(products, p, 0..n);
    let b = gradient(&pbar);
    // Var of the linear combination sum_l b_l P_{l,j} over blocks
    let mut acc = 0.0;
    for row in products.chunks(p + 1) {
        let lin: f64 = (1..=p).map(|l| b[l] * (row[l] - pbar[l])).sum();
        acc += lin * lin;
    }
    acc / n as f64
}

/// Order-`p` generalized Sobol index `E[(E[Y | X_v] - E[Y])^p]` from a
/// `p`-replicate design.
pub fn hsobol(design: &PickFreezeDesign, component: usize, opts: &CiOptions) -> Result<Estimate> {
    check(design, component)?;
    let p = design.p;
    let n = design.n;
    let s = shift(design, component);
    let products = block_products(design, component, s);
    let stat = |blocks: &mut dyn Iterator<Item = usize>| {
        hsobol_value(&SymmetricProducts {
            p,
            pbar: averages(&products, p, blocks),
        })
    };
    let value = stat(&mut (0..n));
    let method = Method::HSobol(p);
    let est = match opts.method {
        CiMethod::None => Estimate::point(method, value, n),
        CiMethod::Asymptotic => {
            let se = (variance_from_products(&products, p, n) / n as f64).sqrt();
            Estimate::normal(method, value, se, opts.level, n, CiMethod::Asymptotic)
        }
        CiMethod::Bootstrap => {
            let stats = bootstrap_stats(n, opts, 3, |idx, _| stat(&mut idx.iter().copied()));
            bootstrap_estimate(method, value, n, &stats, opts.level)
        }
        CiMethod::Subsampling => subsampling_estimate(method, value, n, opts, |r| stat(&mut r.into_iter())),
    };
    Ok(Estimate { p: Some(p), ..est })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_pickfreeze, FnModel};
    use crate::distributions::{Distribution, InputModel};
    use crate::estimators::sobol_classic;

    #[test]
    fn products_by_hand() {
        let d = PickFreezeDesign::from_columns(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let sp = symmetric_products(&d, 0).unwrap();
        assert_eq!(sp.pbar[0], 1.0);
        assert_eq!(sp.pbar[1], 2.0);
        assert!((sp.pbar[2] - 11.0 / 3.0).abs() < 1e-15);
        assert_eq!(sp.pbar[3], 6.0);

        let d = PickFreezeDesign::from_columns(&[vec![0.5], vec![4.0]]).unwrap();
        let sp = symmetric_products(&d, 0).unwrap();
        assert_eq!(sp.pbar, vec![1.0, 2.25, 2.0]);

        let d = PickFreezeDesign::from_columns(&vec![vec![1.5]; 4]).unwrap();
        let sp = symmetric_products(&d, 0).unwrap();
        for l in 0..=4 {
            assert!((sp.pbar[l] - 1.5f64.powi(l as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn order_limit() {
        let d = PickFreezeDesign::from_columns(&vec![vec![1.0, 2.0]; 13]).unwrap();
        assert!(matches!(symmetric_products(&d, 0), Err(Error::OrderLimit { order: 13, limit: 12 })));
        let d = PickFreezeDesign::from_columns(&vec![vec![1.0, 2.0]; 12]).unwrap();
        assert!(symmetric_products(&d, 0).is_ok());
    }

    #[test]
    fn constant_output_is_zero() {
        for p in 2..=6 {
            let d = PickFreezeDesign::from_columns(&vec![vec![0.3; 20]; p]).unwrap();
            let e = hsobol(&d, 0, &CiOptions::with_method(CiMethod::Asymptotic)).unwrap();
            assert_eq!(e.value, 0.0);
            assert_eq!(e.std_error, 0.0);
            assert_eq!(hsobol_variance(&d, 0).unwrap(), 0.0);
        }
    }

    #[test]
    fn order_two_matches_classic() {
        let inputs = InputModel::from_pairs([
            ("a", Distribution::Uniform { a: 0.0, b: 1.0 }),
            ("b", Distribution::Uniform { a: 0.0, b: 1.0 }),
        ])
        .unwrap();
        let d = build_pickfreeze(&FnModel(|x: &[f64]| x[0] * 3.0 + x[1]), &inputs, &[0], 2, 300, 2).unwrap();
        let h = hsobol(&d, 0, &CiOptions::none()).unwrap().value;
        let s = sobol_classic(&d, 0, false, &CiOptions::none()).unwrap().value;
        assert!(((h - s) / s).abs() < 1e-12);
    }

    #[test]
    fn linear_gaussian_variance() {
        // Y = X1, v = {1}: Var((Y - m)^2) = 2
        let inputs = InputModel::from_pairs([
            ("a", Distribution::Gaussian { mu: 0.0, sigma: 1.0 }),
            ("b", Distribution::Gaussian { mu: 0.0, sigma: 1.0 }),
        ])
        .unwrap();
        let d = build_pickfreeze(&FnModel(|x: &[f64]| x[0]), &inputs, &[0], 2, 100_000, 2).unwrap();
        let v = hsobol_variance(&d, 0).unwrap();
        assert!((v - 2.0).abs() < 0.1, "{v}");
    }

    #[test]
    fn gradient_at_order_two() {
        let b = gradient(&[1.0, 0.7, 2.0]);
        assert_eq!(b, vec![0.0, -1.4, 1.0]);
    }
}
