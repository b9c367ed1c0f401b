//! Small native classifiers, heuristic transforms, the training loop and evaluation.

mod access;
mod config;
mod file;
mod model;
mod optim;
mod trainer;
mod transforms;

pub use access::{encode_image, encode_input, DataAccess, DatasetAccess, Input};
pub use config::{model_kind_from_value, sampler_mode_from_value, train_config_from_value, transforms_from_value};
pub use file::{decode_model, encode_model, model_digest, read_model, write_model, ModelMetrics};
pub use model::{softmax_in_place, Model, ModelKind, ModelSpec, Scratch};
pub use optim::{Optimizer, OptimizerKind};
pub use trainer::{evaluate_top1, train, SamplerMode, TrainConfig, TrainedModel};
pub use transforms::{apply_transforms, rotate_channels, Transform, TransformConfig, TransformName};
