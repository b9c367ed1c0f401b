//! Attribute model, dataset ingestion, joint distributions and split manifests.

mod dataset;
mod joint;
mod manifest;
mod schema;

pub use dataset::{load_dataset, AttributedDataset, ExampleRecord, Payload};
pub use joint::{compute_joint, JointDistribution};
pub use manifest::{read_manifest, write_manifest, Origin, SplitManifest, TrainEntry};
pub use schema::{load_schema, Attribute, AttributeSchema};
