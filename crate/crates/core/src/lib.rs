//! Effective capacity of a two-hop decode-and-forward relay link under
//! separate source and relay QoS exponents, with a tandem-queue simulator to
//! check the results.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod config;
pub mod error;
pub mod lmgf;
pub mod par;
mod quadrature;
pub mod queuesim;
pub mod solver;
pub mod sweep;

pub use capacity::{effective_capacity, CapacityResult, CaseTag};
pub use error::{Error, Result};
