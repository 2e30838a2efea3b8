//! Analytic test models with closed-form index values.

pub mod exp_model;
pub mod quadrature;
pub mod toy;

pub use exp_model::{exp_cvm_closed, exp_hq_closed, exp_sobol_closed, gaussian_orthant_g, ExpModel};
pub use toy::{ContinuousInput, ToyFamily, ToyModel};

use crate::error::Result;

/// Default absolute tolerance of the closed-form oracles.
pub const DEFAULT_TOL: f64 = 1e-9;

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// One row of the oracle curve table.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub family: ToyFamily,
    pub p: f64,
    pub alpha: f64,
    pub index: &'static str,
    pub value: f64,
}

/// Closed-form toy-model indices over a parameter grid.
pub fn toy_oracle_curves(families: &[ToyFamily], ps: &[f64], alphas: &[f64]) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::new();
    for &family in families {
        for &p in ps {
            for &alpha in alphas {
                let m = ToyModel::coupled(family, alpha, p)?;
                for (index, value) in [
                    ("D1", m.cvm_closed(1)?),
                    ("D2", m.cvm_closed(2)?),
                    ("S1", m.sobol_closed(1)?),
                    ("S2", m.sobol_closed(2)?),
                ] {
                    rows.push(OracleRow {
                        family,
                        p,
                        alpha,
                        index,
                        value,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// CSV with header `family,p,alpha,index,value`.
pub fn oracle_csv(rows: &[OracleRow]) -> String {
    let mut out = String::from("family,p,alpha,index,value\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:?},{:?},{},{:?}\n",
            r.family.name(),
            r.p,
            r.alpha,
            r.index,
            r.value
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(12, 6), 924.0);
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn oracle_table_layout() {
        let rows = toy_oracle_curves(&[ToyFamily::Exponential], &[0.3], &[1.0, 2.0]).unwrap();
        assert_eq!(rows.len(), 8);
        let csv = oracle_csv(&rows);
        assert!(csv.starts_with("family,p,alpha,index,value\nexponential,0.3,1.0,D1,"));
        assert_eq!(csv.lines().count(), 9);
    }
}
