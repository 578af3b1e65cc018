//! Numerical laboratory for skew products with contracting fibers over
//! piecewise expanding interval maps, their transfer operators, and the
//! statistics (decay of correlations, local dimension, hitting-time
//! logarithm laws) of geometric-Lorenz models and their suspension flows.

// `!(x < y)` is used on purpose so NaN lands on the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod flow;
pub mod io;
pub mod maps;
pub mod measures;
pub mod norms;
pub mod observable;
pub mod par;
pub mod rng;
pub mod stats;
pub mod transfer;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
