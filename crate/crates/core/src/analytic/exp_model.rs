//! `Z = exp(X1 + 2 X2)` with independent standard Gaussian inputs.

use std::f64::consts::{E, PI};

use super::binomial;
use crate::design::Model;
use crate::distributions::{std_normal_cdf, Distribution, InputModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExpModel;

impl ExpModel {
    pub fn inputs(&self) -> InputModel {
        let g = Distribution::Gaussian { mu: 0.0, sigma: 1.0 };
        InputModel::from_pairs([("x1", g), ("x2", g)]).expect("valid by construction")
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        (x1 + 2.0 * x2).exp()
    }

    /// Output distribution function `Phi(ln z / sqrt 5)`.
    pub fn output_cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            0.0
        } else {
            std_normal_cdf(z.ln() / 5f64.sqrt())
        }
    }
}

impl Model for ExpModel {
    fn output_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> std::result::Result<(), String> {
        out[0] = ExpModel::eval(self, x[0], x[1]);
        Ok(())
    }
}

/// `P(U <= aV, U' <= aV)` for independent standard Gaussians `U, U', V`.
pub fn gaussian_orthant_g(a: f64) -> f64 {
    (1.0 + 2.0 * a * a).sqrt().atan() / PI
}

/// Cramer-von Mises index of input 1 or 2.
pub fn exp_cvm_closed(which: usize) -> Result<f64> {
    match which {
        1 => Ok(2f64.atan() / PI - 1.0 / 3.0),
        2 => Ok(19f64.sqrt().atan() / PI - 1.0 / 3.0),
        _ => Err(Error::domain(format!("exp model has inputs 1 and 2, got {which}"))),
    }
}

/// Classical Sobol ratio from log-normal moments:
/// `Var E[Z | X_i] = e^5 (e^{c_i^2} - 1)`, `Var Z = e^5 (e^5 - 1)`.
pub fn exp_sobol_closed(which: usize) -> Result<f64> {
    let c: f64 = match which {
        1 => 1.0,
        2 => 2.0,
        _ => return Err(Error::domain(format!("exp model has inputs 1 and 2, got {which}"))),
    };
    Ok((c * c).exp_m1() / 5f64.exp_m1())
}

/// `E[(E[Z | X_i] - E[Z])^q]` by expanding the power against log-normal
/// moments. `E[Z | X1] = e^{X1 + 2}`, `E[Z | X2] = e^{2 X2 + 1/2}`.
pub fn exp_hq_closed(which: usize, q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::domain(format!("order must be at least 2, got {q}")));
    }
    // E[Z | X_i] = exp(c X + shift)
    let (c, shift) = match which {
        1 => (1.0, 2.0),
        2 => (2.0, 0.5),
        _ => return Err(Error::domain(format!("exp model has inputs 1 and 2, got {which}"))),
    };
    let mean = E.powf(2.5);
    Ok((0..=q)
        .map(|j| {
            let jf = f64::from(j);
            let moment = (jf * shift + 0.5 * jf * jf * c * c).exp();
            binomial(q, j) * (-mean).powi((q - j) as i32) * moment
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, Stream};
    use rand_distr::{Distribution as _, StandardNormal};

    #[test]
    fn tabulated_cvm_values() {
        let d1 = exp_cvm_closed(1).unwrap();
        let d2 = exp_cvm_closed(2).unwrap();
        assert_eq!(format!("{d1:.4}"), "0.0191");
        assert_eq!(format!("{d2:.4}"), "0.0949");
        assert!(d1 > 0.0 && d1 < 1.0 / 6.0);
        assert!(d2 > 0.0 && d2 < 1.0 / 6.0);
    }

    #[test]
    fn sobol_ratios() {
        let s1 = exp_sobol_closed(1).unwrap();
        let s2 = exp_sobol_closed(2).unwrap();
        assert!((s1 - (E - 1.0) / (E.powi(5) - 1.0)).abs() < 1e-15);
        assert!((s2 - (E.powi(4) - 1.0) / (E.powi(5) - 1.0)).abs() < 1e-15);
        assert!(s1 + s2 < 1.0);
        // numerators agree with the order-2 moment expansion
        let var_z = 5f64.exp() * 5f64.exp_m1();
        assert!((exp_hq_closed(1, 2).unwrap() / var_z - s1).abs() < 1e-12);
        assert!((exp_hq_closed(2, 2).unwrap() / var_z - s2).abs() < 1e-12);
    }

    #[test]
    fn orthant_probability() {
        assert!((gaussian_orthant_g(0.0) - 0.25).abs() < 1e-15);
        assert!((gaussian_orthant_g(1.0) - 1.0 / 3.0).abs() < 1e-15);
        let mut last = 0.25;
        for k in 1..50 {
            let g = gaussian_orthant_g(0.2 * k as f64);
            assert!(g > last && g < 0.5);
            assert_eq!(g, gaussian_orthant_g(-0.2 * k as f64));
            last = g;
        }
    }

    #[test]
    fn orthant_probability_monte_carlo() {
        let a = 3.0;
        let mut rng = Stream::new(3, Purpose::Sample).rng();
        let n = 10_000_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let u: f64 = StandardNormal.sample(&mut rng);
            let u2: f64 = StandardNormal.sample(&mut rng);
            let v: f64 = StandardNormal.sample(&mut rng);
            if u <= a * v && u2 <= a * v {
                hits += 1;
            }
        }
        let mc = hits as f64 / n as f64;
        assert!((mc - gaussian_orthant_g(a)).abs() < 1e-3, "{mc}");
    }

    #[test]
    fn output_cdf_matches_simulation() {
        let m = ExpModel;
        let mut rng = Stream::new(4, Purpose::Sample).rng();
        let n = 200_000;
        let zs: Vec<f64> = (0..n)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                m.eval(a, b)
            })
            .collect();
        for t in [0.1, 0.5, 1.0, 3.0, 20.0] {
            let emp = zs.iter().filter(|&&z| z <= t).count() as f64 / n as f64;
            assert!((emp - m.output_cdf(t)).abs() < 0.005);
        }
    }

    #[test]
    fn third_order_index_against_monte_carlo() {
        // E[(e^{X+2} - e^{5/2})^3] with X standard Gaussian
        let exact = exp_hq_closed(1, 3).unwrap();
        let mut rng = Stream::new(5, Purpose::Sample).rng();
        let n = 2_000_000;
        let mean = E.powf(2.5);
        let mc: f64 = (0..n)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                ((x + 2.0).exp() - mean).powi(3)
            })
            .sum::<f64>()
            / n as f64;
        assert!((mc / exact - 1.0).abs() < 0.1, "{mc} vs {exact}");
    }
}
