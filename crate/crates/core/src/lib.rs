//! Neoepitope/MHC binding classification with a two-branch neural ensemble.
//!
//! A dense branch scores the eight numeric features of a candidate; an LSTM
//! branch reads the mutant and wild-type peptides one residue at a time with
//! the same features attached to every step. Their probabilities are averaged
//! with fixed weights and thresholded at 0.5.
//!
//! The crate covers the full pipeline: CSV ingestion and synthetic data,
//! preprocessing, SMOTE over-sampling, training, aggregation, evaluation,
//! relevance propagation and model persistence.

pub mod bundle;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod explain;
pub mod json;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod packing;
pub mod pipeline;
pub mod preprocess;
pub mod smote;

pub use error::{NeoError, Result};
pub use matrix::NumericMatrix;
