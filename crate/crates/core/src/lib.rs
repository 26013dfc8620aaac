//! Counterfactual context matching for short-text classifiers.
//!
//! The pipeline fits a bag-of-words logistic regression, picks the words
//! with the largest coefficients, matches every occurrence of those words to
//! the most similar context from a sentence that lacks the word, and turns
//! the matches into a small feature vector per word. A second logistic
//! regression over those vectors scores how likely each word is to be a
//! spurious (rather than genuine) label correlate, and the scores drive a
//! feature-removal procedure that is evaluated on majority/minority groups.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, the staged
//! pipeline and the command-line interface live in the `spurcheck` crate.

#![no_std]

extern crate alloc;

pub mod contexts;
pub mod corpus;
pub mod docmodel;
pub mod embed;
mod error;
pub mod linalg;
pub mod logistic;
pub mod matcher;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod robustness;
pub mod synth;
pub mod text;
pub mod wordclf;
pub mod wordfeat;

pub use error::{Error, Result};
