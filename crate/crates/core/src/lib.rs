//! Weighted-runs test statistic for ordered observations with Gaussian
//! uncertainties.
//!
//! The statistic `T` is the largest χ² weight of any run of successes
//! (observations above their expected value). This crate provides:
//!
//! - [`runs`]: run decomposition and the observed statistic,
//! - [`exact`]: the exact null distribution of `T` via integer partitions,
//! - [`mc`]: Monte Carlo null distributions, p-values and critical values,
//! - [`power`]: power comparisons against the classic χ² test and the
//!   straight-line fit study,
//! - [`partitions`] and [`special`]: the counting and special-function
//!   machinery underneath.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod input;
pub mod ks;
pub mod mc;
pub mod partitions;
pub mod power;
pub mod report;
pub mod rng;
pub mod runs;
pub mod special;

pub use error::{Error, Result};
pub use runs::{Observation, ObservationSeries, Side};
