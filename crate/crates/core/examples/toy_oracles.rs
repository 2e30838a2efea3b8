//! Closed-form indices of the Bernoulli-plus-continuous toy model, and a
//! Monte Carlo check of one grid point.
//!
//! cargo run --release --example toy_oracles

use pickfreeze::analytic::{oracle_csv, toy_oracle_curves, ToyFamily, ToyModel};
use pickfreeze::build_cvm_design;
use pickfreeze::estimators::{cvm_estimate, CiMethod, CiOptions};

fn main() -> pickfreeze::Result<()> {
    let ps = [0.01, 0.1, 0.3, 0.5];
    let rows = toy_oracle_curves(&ToyFamily::ALL, &ps, &[1.0])?;
    print!("{}", oracle_csv(&rows));

    let m = ToyModel::coupled(ToyFamily::Exponential, 2.0, 0.3)?;
    for which in [1, 2] {
        let d = build_cvm_design(&m, &m.inputs(), &[which - 1], 20_000, 3)?;
        let e = cvm_estimate(&d, &CiOptions::with_method(CiMethod::Asymptotic))?;
        println!(
            "exponential p=0.3 alpha=2 D{which}: closed {:.5}, quadrature {:.5}, estimate {:.5} +- {:.5}",
            m.cvm_closed(which)?,
            m.cvm_quadrature(which)?,
            e.value,
            e.std_error
        );
    }
    Ok(())
}
