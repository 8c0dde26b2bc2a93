//! Max-min fair allocation with monotone submodular valuations.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod auggraph;
pub mod augment;
pub mod cli;
pub mod clp;
pub mod config;
pub mod ellipsoid;
pub mod error;
pub mod flowcore;
pub mod generators;
pub mod instance;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod reduction;
pub mod rng;
pub mod rounding;
pub mod sep;

pub use error::{Error, Result};
