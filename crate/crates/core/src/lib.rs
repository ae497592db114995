//! Fairness toolkit for tabular decision models: fair-metric learning,
//! distributionally robust individually fair training, and group,
//! subgroup, and individual-fairness auditing.

pub mod audit;
pub mod data;
pub mod digest;
pub mod error;
pub mod linalg;
pub mod metric;
pub mod model;
pub mod sensr;
pub mod stats;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, ErrorCategory, Result};
