// Tolerance checks are written `!(value <= tol)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod car;
pub mod dynamics;
pub mod error;
pub mod filter;
pub mod harness;
pub mod lattice;
pub mod locality;
pub mod par;
pub mod specflow;

pub use error::{Error, Result};
