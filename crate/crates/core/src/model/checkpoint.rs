// SPDX-License-Identifier: Apache-2.0

//! Model checkpoints in the tensor file format.
//!
//! Record `header` holds UTF-8 JSON ([`CheckpointHeader`]) as a rank-1 u8
//! tensor; records `layers.{i}.weight` (`in×out`) and `layers.{i}.bias`
//! hold the parameters as f64.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::tensorfile::{find_f64, find_u8, read_tensor_file, write_tensor_file, Record};
use crate::error::{Error, Result};
use crate::model::{Dense, EstimatorModel, Head};
use crate::numkernel::Tensor;
use crate::Scalar;

pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER: &str = "header";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    pub slope: f64,
    pub head: Head,
}

fn weight_name(i: usize) -> String {
    format!("layers.{i}.weight")
}

fn bias_name(i: usize) -> String {
    format!("layers.{i}.bias")
}

pub fn model_to_records<T: Scalar>(model: &EstimatorModel<T>) -> Result<Vec<Record>> {
    let header = CheckpointHeader {
        format_version: CHECKPOINT_VERSION,
        layer_dims: model.layer_dims(),
        slope: model.slope().as_f64(),
        head: model.head(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::domain(format!("header serialization: {e}")))?;
    let mut records = vec![Record::u8(HEADER, Tensor::new(vec![json.len()], json)?)];
    for (i, layer) in model.layers().iter().enumerate() {
        let w: Vec<f64> = layer.weight.iter().map(|v| v.as_f64()).collect();
        records.push(Record::f64(
            weight_name(i),
            Tensor::new(vec![layer.fan_in(), layer.fan_out()], w)?,
        ));
        let b: Vec<f64> = layer.bias.iter().map(|v| v.as_f64()).collect();
        records.push(Record::f64(bias_name(i), Tensor::new(vec![layer.fan_out()], b)?));
    }
    Ok(records)
}

pub fn model_from_records<T: Scalar>(records: &[Record]) -> Result<EstimatorModel<T>> {
    let raw = find_u8(records, HEADER)?;
    let header: CheckpointHeader = serde_json::from_slice(raw.data())
        .map_err(|e| Error::domain(format!("checkpoint header is not valid JSON: {e}")))?;
    if header.format_version != CHECKPOINT_VERSION {
        return Err(Error::domain(format!(
            "unsupported checkpoint version {}",
            header.format_version
        )));
    }
    if header.layer_dims.len() < 2 {
        return Err(Error::domain("checkpoint declares fewer than two layer widths"));
    }
    let mut layers = Vec::with_capacity(header.layer_dims.len() - 1);
    for (i, w) in header.layer_dims.windows(2).enumerate() {
        let weight = find_f64(records, &weight_name(i))?;
        let bias = find_f64(records, &bias_name(i))?;
        if weight.shape() != [w[0], w[1]] || bias.shape() != [w[1]] {
            return Err(Error::shape(format!(
                "layer {i} parameters {:?}/{:?} disagree with header widths {}→{}",
                weight.shape(),
                bias.shape(),
                w[0],
                w[1]
            )));
        }
        layers.push(Dense {
            weight: Array2::from_shape_vec((w[0], w[1]), weight.data().iter().map(|&v| T::lit(v)).collect())
                .expect("shape checked"),
            bias: Array1::from_iter(bias.data().iter().map(|&v| T::lit(v))),
        });
    }
    let model = EstimatorModel::from_layers(layers, T::lit(header.slope), header.head)?;
    if !model.all_finite() {
        return Err(Error::domain("checkpoint contains non-finite parameters"));
    }
    Ok(model)
}

pub fn save_checkpoint<T: Scalar>(model: &EstimatorModel<T>, path: impl AsRef<Path>) -> Result<()> {
    write_tensor_file(path, &model_to_records(model)?)
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<EstimatorModel<T>> {
    model_from_records(&read_tensor_file(path)?)
}
