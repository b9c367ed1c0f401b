//! Controllable distribution-shift benchmarks.
//!
//! The pipeline: an [`data::AttributedDataset`] (loaded from CSV or generated by
//! [`sprites::gen_sprites`]) is split by [`shift`] into a [`data::SplitManifest`] realizing a
//! spurious correlation, low-data drift or unseen-data shift, optionally with label noise and a
//! size cap. [`sampler`] draws minibatches from the reweighted or augmented training
//! distribution, [`train`] fits small classifiers, and [`harness`] runs sweeps and aggregates
//! the results into percent-change matrices, rankings and mean/std tables.

pub mod data;
pub mod error;
pub mod harness;
pub mod json;
pub mod num;
pub mod rng;
pub mod sampler;
pub mod shift;
pub mod sprites;
pub mod train;

#[cfg(test)]
mod testutil;

pub use error::{Error, FieldError, Result};
pub use num::Scalar;

/// Single-precision model; the on-disk parameter format.
pub type Model32 = train::Model<f32>;
/// Double-precision model.
pub type Model64 = train::Model<f64>;
pub type TrainedModel32 = train::TrainedModel<f32>;
pub type TrainedModel64 = train::TrainedModel<f64>;
