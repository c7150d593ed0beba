//! Ground-truth trajectories, training windows and the synthetic
//! classification set.

mod classification;
mod manifest;
mod systems;
mod trajectory;
mod windows;

pub use classification::{
    synthetic_irregular_classification, synthetic_irregular_classification_with,
    ClassificationConfig, LabeledSequence, SequenceDataset,
};
pub use manifest::{DatasetManifest, ManifestEntry};
pub use systems::{
    generate, generate_default, generate_with, OdeSystem, ASYMPTOTIC_LV_D, DEFAULT_SAMPLES,
    GROUND_TRUTH_RTOL, NONLINEAR_LV_A, PERIODIC_LV, SPIRAL_A,
};
pub use trajectory::Trajectory;
pub use windows::{make_windows, make_windows_with, window_at, Window};
