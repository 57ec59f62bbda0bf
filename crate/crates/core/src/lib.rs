#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active_subspace;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod parameterization;
pub mod response_optimization;
pub mod spline;
pub mod textio;

pub use error::{Error, Result};
