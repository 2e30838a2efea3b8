//! Invariant checks shared by the property suite and the acceptance runner.
#![allow(dead_code)]

use pickfreeze::analytic::{ToyFamily, ToyModel};
use pickfreeze::design::{build_cvm_design, build_pickfreeze, DesignPlan, FnModel, VecFnModel};
use pickfreeze::estimators::{
    cvm_estimate, cvm_normalize, cvm_value, hsobol, hsobol_value, multivariate_sobol, sobol_classic, symmetric_products,
    CiMethod, CiOptions,
};
use pickfreeze::gca::{run_gca_study, GcaStudyConfig};
use pickfreeze::{CvmDesign, Distribution, InputModel, PickFreezeDesign};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// Scalar or vector three-sample design on an integer grid, so that ties occur.
pub fn cvm_design() -> impl Strategy<Value = CvmDesign> {
    (2usize..40, 1usize..3).prop_flat_map(|(n, k)| {
        let vals = || proptest::collection::vec((-6i32..6).prop_map(f64::from), n * k);
        (vals(), vals(), vals()).prop_map(move |(z1, z2, w)| CvmDesign::from_rows(k, z1, z2, w).unwrap())
    })
}

/// Scalar order-`p` design with real values.
pub fn pf_design(max_p: usize) -> impl Strategy<Value = PickFreezeDesign> {
    (2usize..=max_p, 2usize..30).prop_flat_map(|(p, n)| {
        proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, n), p)
            .prop_map(|cols| PickFreezeDesign::from_columns(&cols).unwrap())
    })
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg.into()))
    }
}

/// Strictly increasing maps leave the Cramer-von Mises estimate unchanged, bit for bit.
pub fn monotone_invariance(d: &CvmDesign) -> Result<(), TestCaseError> {
    let base = cvm_value(d);
    let maps: [fn(f64) -> f64; 3] = [f64::exp, |x| x * x * x + x, f64::atan];
    for f in maps {
        let t = cvm_value(&d.map(f));
        ensure(t.to_bits() == base.to_bits(), format!("{base} became {t}"))?;
    }
    let swapped = CvmDesign {
        z1: d.z2.clone(),
        z2: d.z1.clone(),
        ..d.clone()
    };
    ensure(cvm_value(&swapped).to_bits() == base.to_bits(), "swapping Z1 and Z2 changed the value")
}

/// Adding a constant to every output leaves the higher-moment index unchanged.
pub fn translation_invariance(d: &PickFreezeDesign, c: f64) -> Result<(), TestCaseError> {
    let shifted = PickFreezeDesign {
        y: d.y.iter().map(|y| y + c).collect(),
        ..d.clone()
    };
    let a = hsobol(d, 0, &CiOptions::none()).unwrap().value;
    let b = hsobol(&shifted, 0, &CiOptions::none()).unwrap().value;
    let scale = d.y.iter().map(|y| y.abs()).fold(1.0, f64::max).powi(d.p as i32);
    ensure((a - b).abs() <= 1e-9 * scale, format!("{a} vs {b} after shift {c}"))
}

/// Replicate order within blocks does not matter.
pub fn permutation_invariance(d: &PickFreezeDesign, rotate: usize) -> Result<(), TestCaseError> {
    let mut cols = d.columns(0);
    cols.rotate_left(rotate % d.p);
    cols.reverse();
    let permuted = PickFreezeDesign::from_columns(&cols).unwrap();
    let a = hsobol(d, 0, &CiOptions::none()).unwrap().value;
    let b = hsobol(&permuted, 0, &CiOptions::none()).unwrap().value;
    ensure(a.to_bits() == b.to_bits(), format!("{a} vs {b}"))?;
    ensure(
        symmetric_products(d, 0).unwrap() == symmetric_products(&permuted, 0).unwrap(),
        "symmetric products changed",
    )
}

/// A constant model gives exactly zero for every index.
pub fn constant_zeros(value: f64, p: usize, n: usize, seed: u64) -> Result<(), TestCaseError> {
    let inputs = InputModel::from_pairs([
        ("a", Distribution::Gaussian { mu: 0.0, sigma: 1.0 }),
        ("b", Distribution::Uniform { a: 0.0, b: 1.0 }),
    ])
    .unwrap();
    let m = FnModel(move |_: &[f64]| value);
    let pf = build_pickfreeze(&m, &inputs, &[0], p, n, seed).unwrap();
    let h = hsobol(&pf, 0, &CiOptions::with_method(CiMethod::Asymptotic)).unwrap();
    ensure(h.value == 0.0 && h.std_error == 0.0, format!("hsobol {h:?}"))?;
    let sp = symmetric_products(&pf, 0).unwrap();
    ensure(sp.pbar.len() == p + 1, "product count")?;
    let cvm = build_cvm_design(&m, &inputs, &[1], n, seed).unwrap();
    ensure(cvm_value(&cvm) == 0.0, "cvm of a constant")?;
    let s = sobol_classic(&cvm.pair(), 0, false, &CiOptions::none()).unwrap();
    ensure(s.value == 0.0, format!("sobol numerator {}", s.value))?;
    ensure(multivariate_sobol(&cvm.pair(), &CiOptions::none()).is_err(), "ratio of a constant should fail")
}

/// The normalized estimate stays in `[-1, 1]`; closed-form normalized values in `[0, 1]`.
pub fn normalized_bounds(d: &CvmDesign) -> Result<(), TestCaseError> {
    let e = cvm_normalize(&cvm_estimate(d, &CiOptions::none()).unwrap(), false).unwrap();
    ensure((-1.0..=1.0).contains(&e.value), format!("normalized {}", e.value))
}

pub fn oracle_bounds(family: ToyFamily, alpha: f64, prob: f64) -> Result<(), TestCaseError> {
    let m = ToyModel::coupled(family, alpha, prob).unwrap();
    for which in [1, 2] {
        let d = 6.0 * m.cvm_closed(which).unwrap();
        ensure((-1e-9..=1.0 + 1e-9).contains(&d), format!("6 D{which} = {d}"))?;
        let s = m.sobol_closed(which).unwrap();
        ensure((0.0..=1.0).contains(&s), format!("S{which} = {s}"))?;
    }
    Ok(())
}

/// Everything computed inside pools of different sizes is identical.
pub fn thread_count_invariance(seed: u64) -> Result<(), TestCaseError> {
    let inputs = InputModel::from_pairs([
        ("a", Distribution::Gaussian { mu: 0.0, sigma: 1.0 }),
        ("b", Distribution::Exponential { lambda: 2.0 }),
        ("c", Distribution::Beta { alpha: 2.0, beta: 3.0 }),
    ])
    .unwrap();
    let model = VecFnModel {
        k: 2,
        f: |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] * x[1] + x[2];
            out[1] = (x[0] - x[2]).exp();
        },
    };
    let run = || {
        let pf = build_pickfreeze(&model, &inputs, &[0, 2], 3, 300, seed).unwrap();
        let h = hsobol(&pf, 1, &CiOptions { resamples: 50, ..Default::default() }).unwrap();
        let cvm = build_cvm_design(&model, &inputs, &[1], 300, seed).unwrap();
        let c = cvm_estimate(&cvm, &CiOptions { resamples: 50, ..Default::default() }).unwrap();
        let m = multivariate_sobol(&cvm.pair(), &CiOptions::with_method(CiMethod::Subsampling)).unwrap();
        let g = run_gca_study(&GcaStudyConfig {
            n: 1000,
            seed,
            ..Default::default()
        })
        .unwrap();
        let mut csv = Vec::new();
        DesignPlan::cvm(&inputs, &[1], 50, seed).unwrap().write_csv(&mut csv).unwrap();
        (h, c, m, g, csv)
    };
    let pool = |t: usize| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
    let one = pool(1).install(run);
    for t in [2, 5] {
        ensure(pool(t).install(run) == one, format!("results differ with {t} threads"))?;
    }
    Ok(())
}

/// `hsobol` at order 2 equals the classical numerator.
pub fn order_two_identity(d: &PickFreezeDesign) -> Result<(), TestCaseError> {
    let h = hsobol_value(&symmetric_products(d, 0).unwrap());
    let hs = hsobol(d, 0, &CiOptions::none()).unwrap().value;
    let s = sobol_classic(d, 0, false, &CiOptions::none()).unwrap().value;
    let scale = d.y.iter().map(|y| y * y).fold(1e-300, f64::max);
    ensure((hs - s).abs() <= 1e-12 * s.abs().max(1e-12 * scale), format!("{hs} vs {s}"))?;
    ensure((h - s).abs() <= 1e-9 * scale, format!("unshifted {h} vs {s}"))
}
