// SPDX-License-Identifier: Apache-2.0

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::evidential::{bce_loss_grad, edl_loss_grad_weighted, BinaryLabel};
use crate::model::Head;
use crate::Scalar;

/// Mean per-row loss over a batch, split into its terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatchLoss {
    pub total: f64,
    /// Evidential log loss, or BCE for the sigmoid head.
    pub data_term: f64,
    /// KL evidence regularizer (zero for the sigmoid head).
    pub kl_reg: f64,
}

/// Mean loss over the rows of `logits` and its gradient with respect to them.
///
/// `lambda` weights the KL regularizer of the evidential head and is ignored
/// by the sigmoid head.
pub fn batch_objective<T: Scalar>(
    head: Head,
    logits: ArrayView2<'_, T>,
    labels: &[u8],
    lambda: T,
) -> Result<(BatchLoss, Array2<T>)> {
    let n = logits.nrows();
    if n != labels.len() {
        return Err(Error::shape(format!("{n} logit rows but {} labels", labels.len())));
    }
    if logits.ncols() != head.output_width() {
        return Err(Error::shape(format!(
            "{head} head expects {} logits per row, got {}",
            head.output_width(),
            logits.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::domain("empty batch"));
    }
    let inv_n = T::from_usize_lossy(n).recip();
    let mut grad = Array2::zeros(logits.dim());
    let mut loss = BatchLoss::default();
    for (i, (row, &label)) in logits.rows().into_iter().zip(labels).enumerate() {
        let y = BinaryLabel::from_index(label)?;
        match head {
            Head::Evidential => {
                let (b, g) = edl_loss_grad_weighted([row[0], row[1]], y, lambda)?;
                loss.total += b.total.as_f64();
                loss.data_term += b.log_loss.as_f64();
                loss.kl_reg += b.kl_reg.as_f64();
                grad[[i, 0]] = g[0] * inv_n;
                grad[[i, 1]] = g[1] * inv_n;
            }
            Head::Sigmoid => {
                let (l, g) = bce_loss_grad(row[0], y);
                loss.total += l.as_f64();
                loss.data_term += l.as_f64();
                grad[[i, 0]] = g * inv_n;
            }
        }
    }
    let scale = 1.0 / n as f64;
    loss.total *= scale;
    loss.data_term *= scale;
    loss.kl_reg *= scale;
    Ok((loss, grad))
}
