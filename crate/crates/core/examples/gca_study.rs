//! Decision-model case study: expected utilities and input rankings.
//!
//! cargo run --release --example gca_study -- [N] [seed]

use pickfreeze::gca::{gca_utilities, run_gca_study, GcaParams, GcaStudyConfig, STRATEGIES};

fn main() -> pickfreeze::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(100_000, |a| a.parse().expect("N"));
    let seed = args.next().map_or(0, |a| a.parse().expect("seed"));

    let base = gca_utilities(&GcaParams::base());
    for (s, u) in STRATEGIES.iter().zip(base) {
        println!("base-value utility {s}: {u:.4}");
    }

    let cfg = GcaStudyConfig { n, seed, ..Default::default() };
    let t = std::time::Instant::now();
    let report = run_gca_study(&cfg)?;
    for (s, m) in STRATEGIES.iter().zip(report.expected_utilities.as_array()) {
        println!("E[U_{s}] = {:.4} (se {:.1e})", m.value, m.se);
    }
    println!("best strategy: {}", report.best);
    println!("{:>6} {:>9} {:>9} {:>9}", "input", "cvm", "sobol", "beta");
    for r in &report.indices {
        println!(
            "{:>6} {:>9.4} {:>9.4} {:>9.4}",
            r.input, r.cvm.value, r.multivariate_sobol.value, r.beta.value
        );
    }
    println!(
        "rankings: cvm {} sobol {} beta {}",
        report.rankings.cvm, report.rankings.sobol, report.rankings.beta
    );
    eprintln!("elapsed {:.1?}", t.elapsed());
    Ok(())
}
