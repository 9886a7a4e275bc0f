// SPDX-License-Identifier: Apache-2.0

//! Deterministic mini-batch training.

use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidential::annealing_coefficient;
use crate::model::{batch_objective, Adam, AdamConfig, BatchLoss, EstimatorModel, Head};
use crate::numkernel::Rng;
use crate::Scalar;

/// Stream ids split off the training seed.
const SHUFFLE_STREAM: u64 = 1;
const SPLIT_STREAM: u64 = 2;

/// Rows scored per validation forward pass.
const EVAL_CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Fraction of rows held out for validation.
    pub val_fraction: f64,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        EarlyStopping {
            patience: 5,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub seed: u64,
    pub early_stopping: Option<EarlyStopping>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            adam: AdamConfig {
                learning_rate: 2e-5,
                ..AdamConfig::default()
            },
            batch_size: 1024,
            seed: 0,
            early_stopping: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::domain("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch_size must be at least 1"));
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0 && a.learning_rate.is_finite()) {
            return Err(Error::domain(format!(
                "learning rate must be positive, got {}",
                a.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || a.eps.is_nan() || a.eps <= 0.0 {
            return Err(Error::domain("Adam betas must lie in [0, 1) and eps must be positive"));
        }
        if let Some(es) = &self.early_stopping {
            if !(es.val_fraction > 0.0 && es.val_fraction < 1.0) {
                return Err(Error::domain(format!(
                    "val_fraction must lie in (0, 1), got {}",
                    es.val_fraction
                )));
            }
            if es.patience == 0 {
                return Err(Error::domain("patience must be at least 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss of each epoch run.
    pub train_loss: Vec<f64>,
    /// Validation loss after each epoch, when early stopping is enabled.
    pub val_loss: Vec<f64>,
    /// KL weight used in each epoch.
    pub lambda: Vec<f64>,
    /// Number of epochs actually run.
    pub epochs_run: usize,
    /// 0-based epoch whose parameters were returned.
    pub best_epoch: usize,
    /// Whether training ended through early stopping.
    pub stopped_early: bool,
}

fn mean_loss<T: Scalar>(
    model: &EstimatorModel<T>,
    x: ArrayView2<'_, T>,
    labels: &[u8],
    lambda: T,
) -> Result<BatchLoss> {
    let n = x.nrows();
    let mut acc = BatchLoss::default();
    for start in (0..n).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(n);
        let logits = model.forward(x.slice(ndarray::s![start..end, ..]))?;
        let (l, _) = batch_objective(model.head(), logits.view(), &labels[start..end], lambda)?;
        let w = (end - start) as f64 / n as f64;
        acc.total += w * l.total;
        acc.data_term += w * l.data_term;
        acc.kl_reg += w * l.kl_reg;
    }
    Ok(acc)
}

fn first_non_finite(loss: &BatchLoss) -> Option<&'static str> {
    if !loss.data_term.is_finite() {
        Some("data loss")
    } else if !loss.kl_reg.is_finite() {
        Some("KL regularizer")
    } else if !loss.total.is_finite() {
        Some("total loss")
    } else {
        None
    }
}

/// Mini-batch Adam on the mean per-row loss of the model's head.
///
/// Rows are reshuffled every epoch from the seeded stream. The evidential
/// KL weight follows `min(1, t/10)` with `t` the 0-based epoch. With early
/// stopping, a seeded `val_fraction` of rows is held out; its loss is
/// measured with the full-strength regularizer so epochs stay comparable
/// while the weight anneals, and the best-validation parameters are
/// returned.
pub fn train<T: Scalar>(
    mut model: EstimatorModel<T>,
    features: ArrayView2<'_, T>,
    labels: &[u8],
    config: &TrainConfig,
) -> Result<(EstimatorModel<T>, TrainReport)> {
    config.validate()?;
    let n = features.nrows();
    if n != labels.len() {
        return Err(Error::shape(format!("{n} feature rows but {} labels", labels.len())));
    }
    if features.ncols() != model.input_dim() {
        return Err(Error::shape(format!(
            "model takes {} features per row, got {}",
            model.input_dim(),
            features.ncols()
        )));
    }
    if n < config.batch_size {
        return Err(Error::domain(format!(
            "{n} rows is fewer than batch size {}",
            config.batch_size
        )));
    }
    if let Some((i, v)) = labels.iter().enumerate().find(|(_, &v)| v > 1) {
        return Err(Error::domain(format!("label {v} at row {i}, expected 0 or 1")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let (train_rows, val) = match &config.early_stopping {
        Some(es) => {
            Rng::with_stream(config.seed, SPLIT_STREAM).shuffle(&mut order);
            let n_val = ((n as f64 * es.val_fraction).ceil() as usize).clamp(1, n - 1);
            let val_rows = order[..n_val].to_vec();
            let val_x = features.select(Axis(0), &val_rows);
            let val_y: Vec<u8> = val_rows.iter().map(|&i| labels[i]).collect();
            (order[n_val..].to_vec(), Some((val_x, val_y, *es)))
        }
        None => (order, None),
    };

    let mut rng = Rng::with_stream(config.seed, SHUFFLE_STREAM);
    let mut optimizer = Adam::new(&model, config.adam);
    let mut report = TrainReport::default();
    let mut best: Option<(f64, EstimatorModel<T>)> = None;
    let mut stale = 0usize;
    let mut rows = train_rows;

    for epoch in 0..config.epochs {
        let lambda_f64: f64 = annealing_coefficient(epoch);
        let lambda: T = annealing_coefficient(epoch);
        rng.shuffle(&mut rows);
        let mut epoch_loss = 0.0;
        for (b, chunk) in rows.chunks(config.batch_size).enumerate() {
            let m = chunk.len();
            let batch_x = features.select(Axis(0), chunk);
            let batch_y: Vec<u8> = chunk.iter().map(|&i| labels[i]).collect();
            let cache = model.forward_cached(batch_x.view())?;
            let (loss, d_logits) = batch_objective(model.head(), cache.logits().view(), &batch_y, lambda)?;
            if let Some(term) = first_non_finite(&loss) {
                return Err(Error::NonFinite { epoch, batch: b, term });
            }
            let grads = model.backward(&cache, &d_logits)?;
            optimizer.step(&mut model, &grads);
            if !model.all_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: b,
                    term: "parameters",
                });
            }
            epoch_loss += loss.total * m as f64;
        }
        report.train_loss.push(epoch_loss / rows.len() as f64);
        report.lambda.push(lambda_f64);
        report.epochs_run = epoch + 1;

        match &val {
            Some((val_x, val_y, es)) => {
                let full = match model.head() {
                    Head::Evidential => T::one(),
                    Head::Sigmoid => T::zero(),
                };
                let v = mean_loss(&model, val_x.view(), val_y, full)?;
                if let Some(term) = first_non_finite(&v) {
                    return Err(Error::NonFinite {
                        epoch,
                        batch: usize::MAX,
                        term,
                    });
                }
                report.val_loss.push(v.total);
                let improved = best.as_ref().is_none_or(|(b, _)| v.total < *b);
                if improved {
                    best = Some((v.total, model.clone()));
                    report.best_epoch = epoch;
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= es.patience {
                        report.stopped_early = true;
                        break;
                    }
                }
            }
            None => report.best_epoch = epoch,
        }
    }

    if let Some((_, best_model)) = best {
        model = best_model;
    }
    Ok((model, report))
}
