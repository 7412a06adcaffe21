//! Sparsity-aware robust normalized subband adaptive filtering.
//!
//! The crate is split along the signal path:
//!
//! - [`filterbank`]: cosine-modulated analysis banks and subband decomposition.
//! - [`saf`]: the multiband adaptive filter state and its two-step update
//!   (robust coarse step followed by zero attraction), with pluggable
//!   robustness criteria and sparsity penalties.
//! - [`aop`]: per-band variable step-sizes and the adaptive penalty weight.
//! - [`scenario`]: AR(1) input, Gaussian / symmetric alpha-stable noise and
//!   synthetic sparse or dispersive unknown systems.
//! - [`harness`]: Monte-Carlo experiments producing NMSD learning curves.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aop;
pub mod error;
pub mod filterbank;
pub mod harness;
pub mod history;
pub mod pipeline;
pub mod saf;
pub mod scenario;

pub use error::{Error, Result};
