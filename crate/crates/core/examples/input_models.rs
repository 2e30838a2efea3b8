//! Input laws, their moments and reproducible sampling streams.
//!
//! cargo run --release --example input_models

use pickfreeze::{fit_beta, Distribution, InputModel, Purpose, Stream};

fn main() -> pickfreeze::Result<()> {
    let (alpha, beta) = fit_beta(0.3, 0.1, 0.9, 0.8)?;
    let inputs = InputModel::from_pairs([
        ("flag", Distribution::Bernoulli { p: 0.2 }),
        ("noise", Distribution::Gaussian { mu: 0.0, sigma: 0.5 }),
        ("width", Distribution::Uniform { a: 1.0, b: 2.0 }),
        ("wait", Distribution::Exponential { lambda: 3.0 }),
        ("share", Distribution::Beta { alpha, beta }),
        (
            "rate",
            Distribution::TruncatedBetaMixture {
                alpha,
                beta,
                m: 0.1,
                max: 0.9,
            },
        ),
        ("pinned", Distribution::Degenerate { value: 0.7 }),
    ])?;
    let n = 50_000;
    for (i, named) in inputs.inputs().iter().enumerate() {
        let stream = Stream::new(42, Purpose::Sample).input(i);
        let xs = named.distribution.sample(n, &stream)?;
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        println!(
            "{:>6}: mean {:.4} (exact {:.4})  var {:.4} (exact {:.4})",
            named.name,
            m,
            named.distribution.mean(),
            v,
            named.distribution.variance()
        );
        assert_eq!(xs, named.distribution.sample(n, &stream)?);
    }
    Ok(())
}
