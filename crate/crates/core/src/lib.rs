//! Pick-and-Freeze global sensitivity analysis.
//!
//! Monte Carlo estimation of first-order Sobol indices, their higher-moment
//! generalizations and the Cramer-von Mises index, with confidence
//! intervals, closed-form test models and a decision-tree case study.

pub mod analytic;
pub mod cli;
pub mod design;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod gca;
pub mod orthant;
pub mod rng;

pub use design::{build_cvm_design, build_pickfreeze, CvmDesign, DesignPlan, FnModel, Model, PickFreezeDesign, Role};
pub use distributions::{fit_beta, Distribution, InputModel, NamedInput};
pub use error::{CellKey, Error, Result};
pub use rng::{Purpose, Stream};
