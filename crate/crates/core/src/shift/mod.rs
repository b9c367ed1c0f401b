//! Shift construction: balanced test splits, the three shifts, the two conditions, and
//! importance weights.

mod build;
mod conditions;
mod reweight;
mod spec;

pub use build::{
    build_manifest, carve_validation, make_low_data, make_shift, make_spurious_correlation, make_test_split,
    make_unseen, TestSplit,
};
pub use conditions::{apply_label_noise, apply_size_cap};
pub use reweight::compute_reweight_weights;
pub use spec::{CountMode, ShiftKind, ShiftSpec, SizeCap, DEFAULT_VAL_FRACTION};
