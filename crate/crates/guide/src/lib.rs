//! The guide in `book/` and the top-level README compiled as doc-tests, one
//! module per document, so that `cargo test` runs every snippet in them.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/circuits.md")]
pub mod circuits {}
#[doc = include_str!("../../../book/src/noise.md")]
pub mod noise {}
#[doc = include_str!("../../../book/src/grover.md")]
pub mod grover {}
#[doc = include_str!("../../../book/src/error-detection.md")]
pub mod error_detection {}
#[doc = include_str!("../../../book/src/decoupling.md")]
pub mod decoupling {}
#[doc = include_str!("../../../book/src/mitigation.md")]
pub mod mitigation {}
#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}
#[doc = include_str!("../../../book/src/campaigns.md")]
pub mod campaigns {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
