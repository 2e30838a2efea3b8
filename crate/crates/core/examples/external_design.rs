//! Design files for models run outside the library: write the input
//! design, let some other program fill in the outputs, read them back and
//! estimate.
//!
//! cargo run --release --example external_design -- [dir]

use std::fs::File;
use std::path::PathBuf;

use pickfreeze::design::Evaluated;
use pickfreeze::estimators::{cvm_estimate, CiOptions};
use pickfreeze::{DesignPlan, Distribution, FnModel, InputModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("pickfreeze_demo"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;

    let inputs = InputModel::from_pairs([
        ("a", Distribution::Exponential { lambda: 1.0 }),
        ("b", Distribution::Uniform { a: -1.0, b: 1.0 }),
    ])?;
    let plan = DesignPlan::cvm(&inputs, &[0], 2_000, 17)?;
    let design_path = dir.join("design.csv");
    plan.write_csv(File::create(&design_path)?)?;

    // stand-in for the external program: read the design file, write outputs
    let read_back = DesignPlan::read_csv(File::open(&design_path)?)?;
    let outputs = read_back.evaluate(&FnModel(|x: &[f64]| x[0].sqrt() + x[1]))?;
    let outputs_path = dir.join("outputs.csv");
    outputs.write_csv(&read_back, File::create(&outputs_path)?)?;

    let y = plan.read_outputs(File::open(&outputs_path)?)?;
    let Evaluated::Cvm(design) = plan.attach(y)? else {
        unreachable!("a cvm plan yields a cvm design")
    };
    let e = cvm_estimate(&design, &CiOptions::default())?;
    println!("{} cells in {}", plan.cell_count(), design_path.display());
    println!("D_a = {:.4} [{:.4}, {:.4}]", e.value, e.ci_low, e.ci_high);
    Ok(())
}
