//! Resampling from importance weights and from the augmentation mixture.

mod alias;
mod mixture;

pub use alias::{write_index_stream, SamplerState};
pub use mixture::{AugmentationSource, MixtureSampler, Slot};
