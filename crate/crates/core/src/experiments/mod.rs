// SPDX-License-Identifier: Apache-2.0

//! End-to-end studies built from the library pieces: the univariate
//! Gaussian toy problem, a high-dimensional extrapolation benchmark and the
//! synthetic segmentation pipeline.

mod extrapolation;
mod pipeline;
mod toy;

pub use extrapolation::{run_extrapolation_benchmark, ExtrapolationConfig, ExtrapolationOutcome};
pub use pipeline::{
    build_synthetic_dataset, run_synthetic_pipeline, score_scene, stack_pixels, LabeledScene, PipelineConfig,
    PipelineOutcome, SyntheticDataset,
};
pub use toy::{binary_entropy, run_toy_gaussian, toy_grid, ToyConfig, ToyOutcome, ToyRow, ToySummary};
