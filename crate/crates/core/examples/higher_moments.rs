//! Higher-moment indices `H_p = E[(E[Y|X_1] - E Y)^p]` from order-`p`
//! designs.
//!
//! `Y = X1 + (X1^2 - 1) / 2 + X2` with standard Gaussian inputs, so
//! `E[Y|X1] - E Y = ((X1 + 1)^2 - 2) / 2` and `H_2, H_3, H_4 = 1.5, 4, 21.75`.
//!
//! cargo run --release --example higher_moments

use pickfreeze::estimators::{hsobol, symmetric_products, CiMethod, CiOptions};
use pickfreeze::{build_pickfreeze, Distribution, FnModel, InputModel};

fn main() -> pickfreeze::Result<()> {
    let g = Distribution::Gaussian { mu: 0.0, sigma: 1.0 };
    let inputs = InputModel::from_pairs([("x1", g), ("x2", g)])?;
    let model = FnModel(|x: &[f64]| x[0] + (x[0] * x[0] - 1.0) / 2.0 + x[1]);
    for (p, exact) in [(2, 1.5), (3, 4.0), (4, 21.75)] {
        let d = build_pickfreeze(&model, &inputs, &[0], p, 200_000, 11)?;
        let e = hsobol(&d, 0, &CiOptions::with_method(CiMethod::Asymptotic))?;
        let sp = symmetric_products(&d, 0)?;
        println!(
            "p={p}: estimate {:.3} +- {:.3}, exact {exact}, mean output {:.4}",
            e.value, e.std_error, sp.pbar[1]
        );
    }
    Ok(())
}
