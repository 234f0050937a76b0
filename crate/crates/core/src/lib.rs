//! Text categorization toolkit built around convolution over sparse
//! one-hot region vectors.
//!
//! The pipeline: raw text is tokenized ([`text`]), encoded against a
//! trained vocabulary, expanded into sparse region vectors ([`regions`]),
//! and fed through one or more parallel convolution branches with dynamic
//! pooling ([`nn`]). Linear bag-of-n-gram baselines, including NB-weighted
//! variants, live in [`baselines`]; evaluation in [`metrics`]. The
//! [`commands`] module implements the train/select/predict/evaluate
//! workflow used by the command-line frontend, with models persisted by
//! [`model_io`].

pub mod baselines;
pub mod commands;
pub mod config;
pub mod error;
pub mod mat;
pub mod metrics;
pub mod model_io;
pub mod nn;
pub mod regions;
pub mod select;
pub mod sparse;
pub mod text;

pub use error::{Error, Result};
pub use mat::Mat;
pub use sparse::SparseVector;
