//! Gatzouras-Lalley carpets carrying two ergodic measures of full dimension.
//!
//! From a single curvature coefficient `B > 2` the [`constructor`] derives a
//! carpet whose dimension objective (see [`entropy::objective_f`]) attains its
//! maximum at two distinct row masses. [`maximizer`] certifies that claim
//! numerically and [`carpet`] builds, renders and samples the attractor.

// `!(x > 0.0)` style guards are intentional: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carpet;
pub mod cli;
pub mod constructor;
pub mod entropy;
pub mod error;
pub mod maximizer;
pub mod numeric;
pub mod report;

pub use constructor::{
    synthesize, AlphabetStrategy, Construction, ConstructionOptions, FeasibilityReport,
};
pub use entropy::{CarpetSpec, DerivedConstants};
pub use error::{CarpetError, Result};
pub use maximizer::{global_maxima, MaximizerReport};
