//! The four interval methods applied to one design.
//!
//! cargo run --release --example ci_methods

use pickfreeze::estimators::{cvm_estimate, sobol_classic, CiMethod, CiOptions};
use pickfreeze::{build_cvm_design, Distribution, FnModel, InputModel};

fn main() -> pickfreeze::Result<()> {
    let g = Distribution::Gaussian { mu: 0.0, sigma: 1.0 };
    let inputs = InputModel::from_pairs([("x1", g), ("x2", g)])?;
    // S1 = 1/5
    let model = FnModel(|x: &[f64]| x[0] + 2.0 * x[1]);
    let design = build_cvm_design(&model, &inputs, &[0], 5_000, 21)?;

    for method in [CiMethod::None, CiMethod::Asymptotic, CiMethod::Bootstrap, CiMethod::Subsampling] {
        let opts = CiOptions {
            resamples: 300,
            seed: 21,
            ..CiOptions::with_method(method)
        };
        let s = sobol_classic(&design.pair(), 0, true, &opts)?;
        let d = cvm_estimate(&design, &opts)?;
        println!(
            "{:<12} S1 {:.4} [{:.4}, {:.4}]   D1 {:.4} [{:.4}, {:.4}]",
            format!("{method:?}"),
            s.value,
            s.ci_low,
            s.ci_high,
            d.value,
            d.ci_low,
            d.ci_high
        );
    }
    Ok(())
}
