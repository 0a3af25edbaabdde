//! Bayesian-network skill diagnosis: discrete student models, exact scoring
//! with evidence fragments, Gibbs calibration of network parameters, and the
//! IRT counterparts used for adaptive testing.

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod fragment;
pub mod gibbs;
pub mod irt;
pub mod model;
pub mod stats;

pub use error::{Error, Result};
