//! Kolmogorov-distance (beta) importance from a single i.i.d. sample.
//!
//! cargo run --release --example beta_index

use pickfreeze::estimators::{beta_index, CiMethod, CiOptions};
use pickfreeze::{Distribution, FnModel, InputModel};

fn main() -> pickfreeze::Result<()> {
    let u = Distribution::Uniform { a: 0.0, b: 1.0 };
    let inputs = InputModel::from_pairs([("strong", u), ("weak", u), ("idle", u)])?;
    let model = FnModel(|x: &[f64]| 4.0 * x[0] + x[1] * x[1]);
    let boot = CiOptions {
        resamples: 100,
        ..CiOptions::with_method(CiMethod::Bootstrap)
    };
    let sub = CiOptions::with_method(CiMethod::Subsampling);
    for (v, name) in inputs.names().enumerate() {
        let b = beta_index(&inputs, &model, v, 20_000, 20, 5, &boot)?;
        let s = beta_index(&inputs, &model, v, 20_000, 20, 5, &sub)?;
        println!(
            "{name:>6}: {:.4}  bootstrap [{:.4}, {:.4}]  subsampling [{:.4}, {:.4}]",
            b.value, b.ci_low, b.ci_high, s.ci_low, s.ci_high
        );
    }
    Ok(())
}
