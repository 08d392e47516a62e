//! Numerical laboratory for the viscous Hamilton-Jacobi equation
//! `u_t - nu Lap(u) + |grad u|^q = 0` with nonnegative data.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod constants;
pub mod error;
pub mod estimates;
pub mod grid;
pub mod initial_data;
pub mod io;
pub mod ode;
pub mod rates;
pub mod selfsimilar;
pub mod solver;
pub mod supersolution;

pub use error::{Error, Result};
