//! File formats, pipeline stages and the command-line front end for
//! finding spurious word–label correlations in text classifiers.
//!
//! The numerical work lives in `spurcheck-core`; this crate moves its inputs
//! and outputs through files, stamps every artifact with the hash of the
//! configuration that produced it, and runs the expensive loops on all
//! cores.

pub mod annotate;
pub mod artifact;
pub mod bench;
pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod report;
pub mod stages;

pub use error::{Error, Result};
