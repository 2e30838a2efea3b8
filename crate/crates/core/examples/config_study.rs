//! A study described in JSON, run through the same path as the command line.
//!
//! cargo run --release --example config_study -- [config.json]

use pickfreeze::cli::{load_json, parse_json, run_study, StudyConfig};

const DEFAULT: &str = include_str!("configs/linear_hsobol.json");

fn main() -> pickfreeze::Result<()> {
    let cfg: StudyConfig = match std::env::args().nth(1) {
        Some(path) => load_json(path.as_ref())?,
        None => parse_json(DEFAULT)?,
    };
    let report = run_study(&cfg, &std::env::temp_dir())?;
    println!("{}", report.to_json());
    Ok(())
}
