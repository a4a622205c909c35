//! Noisy density-matrix simulation of small Grover search circuits, with
//! [[4,2,2]] error detection, dynamical decoupling and readout mitigation.

// Negated float comparisons below deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod counts;
pub mod dd;
pub mod error;
pub mod grover;
pub mod linalg;
pub mod mem;
pub mod noise;
pub mod qed422;
pub mod stats;

pub use error::{Error, Result};
