// SPDX-License-Identifier: Apache-2.0

//! Uncertainty-aware likelihood ratio estimation for pixel-wise
//! out-of-distribution detection.
//!
//! A small per-feature classifier separates in-distribution features from
//! synthetic proxy outliers. Its evidential head predicts Dirichlet
//! concentrations `α = exp(o) + 1` per pixel, and the ratio `α₁ / α₀` is used
//! as a likelihood-ratio score. A plain sigmoid head trained with binary
//! cross-entropy is provided as the baseline.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`, which is what the file formats and the
//! command-line tool use.

#![deny(unsafe_code)]

pub mod data;
pub mod error;
pub mod eval;
pub mod evidential;
pub mod experiments;
pub mod model;
pub mod numkernel;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Class index of in-distribution pixels.
pub const ID_CLASS: usize = 0;
/// Class index of out-of-distribution pixels.
pub const OOD_CLASS: usize = 1;

pub type Tensor = numkernel::Tensor<f64>;
pub type DirichletParams = evidential::DirichletParams<f64>;
pub type Evidence = evidential::Evidence<f64>;
pub type LossBreakdown = evidential::LossBreakdown<f64>;
pub type EstimatorModel = model::EstimatorModel<f64>;
pub type FeatureMap = data::FeatureMap<f64>;
pub type DirichletMap = model::DirichletMap<f64>;
pub type ScoreMap = eval::ScoreMap<f64>;
pub type ClassMeans = data::ClassMeans<f64>;
