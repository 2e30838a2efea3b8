//! The linear toy model `Y = alpha * X1 + X2` with `X1 ~ Bernoulli(p)`.

use serde::{Deserialize, Serialize};

use super::quadrature::{integrate, integrate_domain, Domain};
use super::DEFAULT_TOL;
use crate::design::Model;
use crate::distributions::{std_normal_cdf, Distribution, InputModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyFamily {
    Gaussian,
    Uniform,
    Exponential,
}

impl ToyFamily {
    pub const ALL: [ToyFamily; 3] = [ToyFamily::Gaussian, ToyFamily::Uniform, ToyFamily::Exponential];

    pub fn name(self) -> &'static str {
        match self {
            ToyFamily::Gaussian => "gaussian",
            ToyFamily::Uniform => "uniform",
            ToyFamily::Exponential => "exponential",
        }
    }
}

/// Law of the continuous input `X2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ContinuousInput {
    /// Centered Gaussian with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Uniform on `[0, b]`.
    Uniform { b: f64 },
    /// Exponential with rate `lambda`.
    Exponential { lambda: f64 },
}

impl ContinuousInput {
    pub fn family(&self) -> ToyFamily {
        match self {
            ContinuousInput::Gaussian { .. } => ToyFamily::Gaussian,
            ContinuousInput::Uniform { .. } => ToyFamily::Uniform,
            ContinuousInput::Exponential { .. } => ToyFamily::Exponential,
        }
    }

    pub fn distribution(&self) -> Distribution {
        match *self {
            ContinuousInput::Gaussian { sigma } => Distribution::Gaussian { mu: 0.0, sigma },
            ContinuousInput::Uniform { b } => Distribution::Uniform { a: 0.0, b },
            ContinuousInput::Exponential { lambda } => Distribution::Exponential { lambda },
        }
    }

    fn density(&self, x: f64) -> f64 {
        match *self {
            ContinuousInput::Gaussian { sigma } => {
                let z = x / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            ContinuousInput::Uniform { b } => {
                if (0.0..=b).contains(&x) {
                    1.0 / b
                } else {
                    0.0
                }
            }
            ContinuousInput::Exponential { lambda } => {
                if x >= 0.0 {
                    lambda * (-lambda * x).exp()
                } else {
                    0.0
                }
            }
        }
    }

    fn domain(&self) -> Domain {
        match *self {
            ContinuousInput::Gaussian { .. } => Domain::RealLine,
            ContinuousInput::Uniform { b } => Domain::Interval(0.0, b),
            ContinuousInput::Exponential { .. } => Domain::UpperHalfLine(0.0),
        }
    }

    /// Points where the distribution function has a kink.
    fn kinks(&self) -> Vec<f64> {
        match *self {
            ContinuousInput::Gaussian { .. } => vec![],
            ContinuousInput::Uniform { b } => vec![0.0, b],
            ContinuousInput::Exponential { .. } => vec![0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub alpha: f64,
    pub prob: f64,
    pub x2: ContinuousInput,
}

impl ToyModel {
    /// `X2` scaled so that `Var(X2) = alpha^2 p (1 - p)`, which gives both
    /// inputs the same first-order Sobol index.
    pub fn coupled(family: ToyFamily, alpha: f64, prob: f64) -> Result<Self> {
        check(alpha, prob)?;
        let sd = alpha * (prob * (1.0 - prob)).sqrt();
        let x2 = match family {
            ToyFamily::Gaussian => ContinuousInput::Gaussian { sigma: sd },
            ToyFamily::Uniform => ContinuousInput::Uniform {
                b: 2.0 * alpha * (3.0 * prob * (1.0 - prob)).sqrt(),
            },
            ToyFamily::Exponential => ContinuousInput::Exponential { lambda: 1.0 / sd },
        };
        Ok(ToyModel { alpha, prob, x2 })
    }

    /// Free choice of the `X2` law, e.g. to probe limits the coupling cannot reach.
    pub fn with_x2(alpha: f64, prob: f64, x2: ContinuousInput) -> Result<Self> {
        check(alpha, prob)?;
        x2.distribution().validate()?;
        Ok(ToyModel { alpha, prob, x2 })
    }

    pub fn family(&self) -> ToyFamily {
        self.x2.family()
    }

    pub fn inputs(&self) -> InputModel {
        InputModel::from_pairs([
            ("x1", Distribution::Bernoulli { p: self.prob }),
            ("x2", self.x2.distribution()),
        ])
        .expect("toy inputs are valid by construction")
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.alpha * x1 + x2
    }

    fn cdf(&self, t: f64) -> f64 {
        self.x2.distribution().cdf(t)
    }

    /// `int F(t - alpha) dF(t)`, i.e. `P(X2' + alpha <= X2)`.
    fn shifted_overlap(&self) -> Result<f64> {
        let alpha = self.alpha;
        let kinks: Vec<f64> = self.x2.kinks().into_iter().map(|k| k + alpha).collect();
        self.against_density(|t| self.cdf(t - alpha), 0.0, &kinks)
    }

    /// `int g(t) dF(t - shift)`, splitting at kinks of `g` given in `t` units.
    fn against_density<G: Fn(f64) -> f64>(&self, g: G, shift: f64, g_kinks: &[f64]) -> Result<f64> {
        let integrand = |s: f64| g(s + shift) * self.x2.density(s);
        let mut cuts: Vec<f64> = self
            .x2
            .kinks()
            .into_iter()
            .chain(g_kinks.iter().map(|k| k - shift))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let (lo, hi) = match self.x2.domain() {
            Domain::Interval(a, b) => (a, b),
            Domain::UpperHalfLine(a) => (a, f64::INFINITY),
            Domain::LowerHalfLine(b) => (f64::NEG_INFINITY, b),
            Domain::RealLine => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let mut edges = vec![lo];
        edges.extend(cuts.into_iter().filter(|&c| c > lo && c < hi));
        edges.push(hi);
        let tol = DEFAULT_TOL / edges.len() as f64;
        let mut total = 0.0;
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            total += match (a.is_finite(), b.is_finite()) {
                (true, true) => integrate(integrand, a, b, tol)?,
                (true, false) => integrate_domain(integrand, Domain::UpperHalfLine(a), tol)?,
                (false, true) => integrate_domain(integrand, Domain::LowerHalfLine(b), tol)?,
                (false, false) => integrate_domain(integrand, Domain::RealLine, tol)?,
            };
        }
        Ok(total)
    }

    /// Cramer-von Mises index of input `which` from its integral form, by
    /// quadrature, for any `X2` law.
    pub fn cvm_quadrature(&self, which: usize) -> Result<f64> {
        let p = self.prob;
        match which {
            1 => {
                let alpha = self.alpha;
                let gap = |t: f64| (self.cdf(t) - self.cdf(t - alpha)).powi(2);
                let kinks: Vec<f64> = self
                    .x2
                    .kinks()
                    .into_iter()
                    .flat_map(|k| [k, k + alpha])
                    .collect();
                let unshifted = self.against_density(gap, 0.0, &kinks)?;
                let shifted = self.against_density(gap, alpha, &kinks)?;
                Ok(p * (1.0 - p) * ((1.0 - p) * unshifted + p * shifted))
            }
            2 => Ok(1.0 / 6.0 - p * (1.0 - p) * (0.5 - self.shifted_overlap()?)),
            _ => Err(Error::domain(format!("toy model has inputs 1 and 2, got {which}"))),
        }
    }

    /// Closed-form Cramer-von Mises index; the Gaussian `D1` has no closed
    /// form and falls back to quadrature.
    pub fn cvm_closed(&self, which: usize) -> Result<f64> {
        let p = self.prob;
        let spread = p * (1.0 - p);
        let alpha = self.alpha;
        match (which, self.x2) {
            (1, ContinuousInput::Uniform { b }) => {
                let r = alpha / b;
                Ok(if alpha <= b {
                    spread * r * r * (1.0 - 2.0 / 3.0 * r)
                } else {
                    spread / 3.0
                })
            }
            (2, ContinuousInput::Uniform { b }) => {
                let keep = if alpha <= b { ((b - alpha) / b).powi(2) } else { 0.0 };
                Ok(1.0 / 6.0 - spread / 2.0 * (1.0 - keep))
            }
            (1, ContinuousInput::Exponential { lambda }) => {
                Ok(spread / 3.0 * (-(-lambda * alpha).exp_m1()).powi(2))
            }
            (2, ContinuousInput::Exponential { lambda }) => {
                Ok(1.0 / 6.0 - spread / 2.0 * (-(-lambda * alpha).exp_m1()))
            }
            (1, ContinuousInput::Gaussian { .. }) => self.cvm_quadrature(1),
            (2, ContinuousInput::Gaussian { sigma }) => {
                let overlap = std_normal_cdf(-alpha / (sigma * std::f64::consts::SQRT_2));
                Ok(1.0 / 6.0 - spread * (0.5 - overlap))
            }
            _ => Err(Error::domain(format!("toy model has inputs 1 and 2, got {which}"))),
        }
    }

    /// `E[(E[Y | X_which] - E[Y])^q]`.
    pub fn hq_closed(&self, which: usize, q: u32) -> Result<f64> {
        if q < 2 {
            return Err(Error::domain(format!("order must be at least 2, got {q}")));
        }
        let p = self.prob;
        match which {
            1 => Ok(self.alpha.powi(q as i32)
                * (p * (1.0 - p).powi(q as i32) + (-p).powi(q as i32) * (1.0 - p))),
            2 => match self.x2 {
                ContinuousInput::Gaussian { sigma } => Ok(if q % 2 == 1 {
                    0.0
                } else {
                    let half = q / 2;
                    let double_factorial: f64 = (1..=q).map(f64::from).product::<f64>()
                        / (2f64.powi(half as i32) * (1..=half).map(f64::from).product::<f64>());
                    sigma.powi(q as i32) * double_factorial
                }),
                ContinuousInput::Uniform { b } => Ok(if q % 2 == 1 {
                    0.0
                } else {
                    (b / 2.0).powi(q as i32) / f64::from(q + 1)
                }),
                ContinuousInput::Exponential { lambda } => {
                    let mean = 1.0 / lambda;
                    let central = move |x: f64| (x - mean).powi(q as i32) * lambda * (-lambda * x).exp();
                    let scale = mean.powi(q as i32);
                    integrate_domain(central, Domain::UpperHalfLine(0.0), DEFAULT_TOL * scale.max(1.0))
                }
            },
            _ => Err(Error::domain(format!("toy model has inputs 1 and 2, got {which}"))),
        }
    }

    /// Classical first-order Sobol ratio of either input.
    pub fn sobol_closed(&self, which: usize) -> Result<f64> {
        let h1 = self.hq_closed(1, 2)?;
        let var_x2 = self.x2.distribution().variance();
        match which {
            1 => Ok(h1 / (h1 + var_x2)),
            2 => Ok(var_x2 / (h1 + var_x2)),
            _ => Err(Error::domain(format!("toy model has inputs 1 and 2, got {which}"))),
        }
    }
}

fn check(alpha: f64, prob: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::domain(format!("p must lie in (0, 1), got {prob}")));
    }
    Ok(())
}

impl Model for ToyModel {
    fn output_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> std::result::Result<(), String> {
        out[0] = ToyModel::eval(self, x[0], x[1]);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        let m = ToyModel::coupled(ToyFamily::Gaussian, 2.0, 0.3).unwrap();
        assert_eq!(m.eval(0.0, 1.5), 1.5);
        assert_eq!(m.eval(1.0, 0.0), 2.0);
        let m = ToyModel::coupled(ToyFamily::Gaussian, 1.0, 0.3).unwrap();
        assert_eq!(m.eval(1.0, -1.0), 0.0);
    }

    #[test]
    fn coupling_equalizes_variances() {
        for family in ToyFamily::ALL {
            for (alpha, p) in [(0.5, 0.1), (1.0, 0.3), (2.0, 0.5)] {
                let m = ToyModel::coupled(family, alpha, p).unwrap();
                let v = m.x2.distribution().variance();
                assert!((v - alpha * alpha * p * (1.0 - p)).abs() < 1e-12 * v.max(1.0));
                assert!((m.sobol_closed(1).unwrap() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_matches_explicit_formulas() {
        for family in [ToyFamily::Uniform, ToyFamily::Exponential] {
            for p in [0.1, 0.3, 0.5] {
                for alpha in [0.5, 1.0, 2.0] {
                    let m = ToyModel::coupled(family, alpha, p).unwrap();
                    for which in [1, 2] {
                        let closed = m.cvm_closed(which).unwrap();
                        let quad = m.cvm_quadrature(which).unwrap();
                        assert!((closed - quad).abs() < 1e-8, "{family:?} p={p} a={alpha} D{which}: {closed} vs {quad}");
                    }
                }
            }
        }
    }

    #[test]
    fn gaussian_d2_identity() {
        let m = ToyModel::coupled(ToyFamily::Gaussian, 1.0, 0.3).unwrap();
        let quad = m.cvm_quadrature(2).unwrap();
        let closed = m.cvm_closed(2).unwrap();
        assert!((quad - closed).abs() < 1e-8, "{quad} vs {closed}");
    }

    #[test]
    fn exponential_limit() {
        let m = ToyModel::with_x2(1.0, 0.5, ContinuousInput::Exponential { lambda: 50.0 }).unwrap();
        assert!((m.cvm_closed(1).unwrap() - 1.0 / 12.0).abs() < 1e-12);
        assert!((m.cvm_closed(2).unwrap() - 1.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_wide_shift_branch() {
        // p small makes alpha > b under the coupling
        let m = ToyModel::coupled(ToyFamily::Uniform, 1.0, 0.01).unwrap();
        let ContinuousInput::Uniform { b } = m.x2 else { unreachable!() };
        assert!(m.alpha > b);
        assert!((m.cvm_closed(1).unwrap() - 0.01 * 0.99 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn small_p_limit() {
        for family in ToyFamily::ALL {
            let m = ToyModel::coupled(family, 1.0, 1e-3).unwrap();
            assert!(m.cvm_closed(1).unwrap().abs() < 1e-3);
            assert!((m.cvm_closed(2).unwrap() - 1.0 / 6.0).abs() < 1e-3);
        }
    }

    #[test]
    fn order_q_indices() {
        for family in ToyFamily::ALL {
            let m = ToyModel::coupled(family, 1.5, 0.3).unwrap();
            let h1 = m.hq_closed(1, 2).unwrap();
            let h2 = m.hq_closed(2, 2).unwrap();
            assert!((h1 - h2).abs() < 1e-8 * h1, "{family:?}: {h1} vs {h2}");
        }
        let g = ToyModel::coupled(ToyFamily::Gaussian, 2.0, 0.3).unwrap();
        let ContinuousInput::Gaussian { sigma } = g.x2 else { unreachable!() };
        assert!((g.hq_closed(2, 4).unwrap() - 3.0 * sigma.powi(4)).abs() < 1e-12);
        assert_eq!(g.hq_closed(2, 3).unwrap(), 0.0);
        let half = ToyModel::coupled(ToyFamily::Uniform, 2.0, 0.5).unwrap();
        assert!(half.hq_closed(1, 3).unwrap().abs() < 1e-15);
    }

    #[test]
    fn exponential_central_moments() {
        // central moments of Exp(lambda) are !q / lambda^q (subfactorials)
        let m = ToyModel::with_x2(1.0, 0.3, ContinuousInput::Exponential { lambda: 2.0 }).unwrap();
        for (q, derangements) in [(2u32, 1.0), (3, 2.0), (4, 9.0), (5, 44.0)] {
            let v = m.hq_closed(2, q).unwrap();
            let expected = derangements / 2f64.powi(q as i32);
            assert!((v - expected).abs() < 1e-8, "q={q}: {v} vs {expected}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ToyModel::coupled(ToyFamily::Gaussian, 0.0, 0.3).is_err());
        assert!(ToyModel::coupled(ToyFamily::Gaussian, 1.0, 1.0).is_err());
        let m = ToyModel::coupled(ToyFamily::Gaussian, 1.0, 0.3).unwrap();
        assert!(m.cvm_closed(3).is_err());
        assert!(m.hq_closed(1, 1).is_err());
    }
}
