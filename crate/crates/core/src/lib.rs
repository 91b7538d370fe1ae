//! Numerical densities, tangent cones, relative multiplicities and metric
//! regularity at infinity for unbounded sets given by parametrized charts.

pub mod error;
pub mod expr;
pub mod linalg;
pub mod asymptotics;
pub mod classify;
pub mod cli;
pub mod cones;
pub mod measure;
pub mod metric;
pub mod multiplicity;
pub mod oracle;
pub mod scene;

pub use error::{Error, Result};
