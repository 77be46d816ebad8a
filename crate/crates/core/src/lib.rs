//! Synthetic tabular and relational data generation with small
//! autoregressive transformers.
//!
//! The pipeline: read a delimited table ([`ingest`]), expand it into
//! column-scoped token sequences ([`encode`]), fit a decoder-only language
//! model over those sequences ([`nnet`], [`train`]) while watching a
//! distance-to-closest-record statistic for copying ([`overfit`]), then
//! sample new rows under the positional grammar ([`sample`]) and score the
//! result ([`evaluate`]). Child tables are generated conditional on their
//! parent row with the fitted parent model as a frozen encoder.
//!
//! Numerics are generic over the scalar type through [`scalar::Scalar`];
//! concrete aliases for the two supported widths sit at the crate root.

pub mod error;
pub mod scalar;
pub mod rng;
pub mod ingest;
pub mod encode;
pub mod nnet;
pub mod overfit;
pub mod sample;
pub mod train;
pub mod evaluate;
pub mod config;
pub mod artifact;
pub mod toydata;
pub mod pipeline;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Single-precision transformer, the default training width.
pub type ModelF32 = nnet::TransformerModel<f32>;
/// Double-precision transformer, used for gradient checks and audits.
pub type ModelF64 = nnet::TransformerModel<f64>;
