// SPDX-License-Identifier: Apache-2.0

//! Per-feature-vector estimator network.
//!
//! A stack of affine layers with leaky-ReLU between them, applied to each
//! pixel's feature vector independently (the dense equivalent of a chain of
//! 1×1 convolutions). The last layer emits two evidential logits or one
//! sigmoid logit depending on the [`Head`].

mod adam;
mod checkpoint;
mod network;
mod objective;
mod predict;
mod train;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{load_checkpoint, model_from_records, model_to_records, save_checkpoint, CheckpointHeader};
pub use network::{init_model, Dense, EstimatorModel, ForwardCache, Gradients, DEFAULT_SLOPE};
pub use objective::{batch_objective, BatchLoss};
pub use predict::{predict_map, DirichletMap, Prediction, ProbabilityMap, RowOutputs};
pub use train::{train, EarlyStopping, TrainConfig, TrainReport};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Output head of the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Two logits → evidence → Dirichlet, trained with the evidential loss.
    Evidential,
    /// One logit → sigmoid, trained with binary cross-entropy.
    Sigmoid,
}

impl Head {
    pub fn output_width(self) -> usize {
        match self {
            Head::Evidential => 2,
            Head::Sigmoid => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Head::Evidential => "evidential",
            Head::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "evidential" | "edl" => Ok(Head::Evidential),
            "sigmoid" | "bce" => Ok(Head::Sigmoid),
            other => Err(Error::Domain(format!(
                "unknown head {other:?}, expected evidential or sigmoid"
            ))),
        }
    }
}
