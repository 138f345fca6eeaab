//! Group-aware imputation of missing covariates, downstream risk prediction
//! and fairness-gap measurement, with closed-form bias theory.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod harness;
pub mod impute;
pub mod metrics;
pub mod missingness;
pub mod numeric;
pub mod predict;
pub mod synthgen;
pub mod theory;

pub use error::{Error, Result};
