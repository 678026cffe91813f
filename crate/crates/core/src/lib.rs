//! Numerical certification of converse operator Jensen inequalities on
//! finite-dimensional self-adjoint operators.

// Negated float comparisons are how inputs reject NaN here.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod batch;
pub mod converse;
pub mod error;
pub mod kantorovich;
pub mod operator;
pub mod phi;
pub mod sandwich;
pub mod scalar;
pub mod tail;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
