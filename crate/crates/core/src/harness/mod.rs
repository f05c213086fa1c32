//! Synthetic stand-in for an image-based pose-regression experiment.
//!
//! A scene maps each pose to a fixed random nonlinear embedding; a subset of
//! rows carries a 180-degree yaw ambiguity. A one-hidden-layer tanh network
//! regresses the 28-dimensional prediction and is trained with Adam under any
//! of the four losses.

pub mod adam;
pub mod regressor;
pub mod scene;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use regressor::RegressorParams;
pub use scene::{generate_scene, SceneConfig, SceneData, SyntheticDataset};
pub use train::{evaluate, rotation_variance, train, train_observed, EpochRecord, Evaluation, TrainConfig, TrainOutcome};
