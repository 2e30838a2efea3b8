//! Cramer-von Mises and Sobol indices of `exp(X1 + 2 X2)` against their
//! closed forms.
//!
//! cargo run --release --example exp_model -- [N] [seed]

use pickfreeze::analytic::{exp_cvm_closed, exp_sobol_closed, ExpModel};
use pickfreeze::estimators::{cvm_estimate, sobol_classic, CiMethod, CiOptions};
use pickfreeze::build_cvm_design;

fn main() -> pickfreeze::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(100_000, |a| a.parse().expect("N"));
    let seed = args.next().map_or(1, |a| a.parse().expect("seed"));

    let model = ExpModel;
    let inputs = model.inputs();
    let opts = CiOptions::with_method(CiMethod::Asymptotic);
    println!("{:>3} {:>8} {:>18} {:>8} {:>18}", "v", "D", "estimate", "S", "estimate");
    for v in 1..=2 {
        let design = build_cvm_design(&model, &inputs, &[v - 1], n, seed)?;
        let d = cvm_estimate(&design, &opts)?;
        let s = sobol_classic(&design.pair(), 0, true, &opts)?;
        println!(
            "{v:>3} {:>8.4} {:>9.4} +- {:<6.4} {:>8.4} {:>9.4} +- {:<6.4}",
            exp_cvm_closed(v)?,
            d.value,
            d.std_error,
            exp_sobol_closed(v)?,
            s.value,
            s.std_error
        );
    }
    Ok(())
}
