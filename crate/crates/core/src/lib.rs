//! First integrals of geodesic flows built from pairs of geodesically
//! equivalent metrics, with numerical verification tools.

// Negated comparisons reject NaN on purpose; dual-number operators and
// index-heavy numerics trip the remaining two lints.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::suspicious_arithmetic_impl,
    clippy::needless_range_loop
)]

pub mod catalog;
pub mod config;
pub mod dsl;
pub mod dual;
pub mod error;
pub mod factory;
pub mod geometry;
pub mod hamiltonian;
pub mod integrals;
pub mod levi_civita;
pub mod linalg;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
