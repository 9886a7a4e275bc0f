// SPDX-License-Identifier: Apache-2.0

//! Feature and label maps, the tensor file format, synthetic data
//! generators, the cut-resize-paste compositor and per-class mean features.

mod maps;
mod means;
mod mix;
mod synth;
pub mod tensorfile;

pub use maps::{FeatureMap, LabelMap};
pub use means::{class_means, ClassMean, ClassMeans};
pub use mix::{anomaly_mix, Composite, MixConfig, OodObject, Placement};
pub use synth::{analytic_gaussian_lr, gen_gaussian_1d, gen_synthetic_scene, Scene, SceneConfig, SceneGenerator};
pub use tensorfile::{read_tensor_file, write_tensor_file, Record, RecordData};

/// Class id marking pixels that belong to no in-distribution class.
pub const UNLABELED: u8 = u8::MAX;
