// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use ndarray::ArrayView2;

use crate::data::ClassMeans;
use crate::error::{Error, Result};
use crate::Scalar;

/// Default bin width in cosine-distance units.
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

/// `1 − x·μ / (‖x‖‖μ‖)`, clamped to `[0, 2]`.
pub fn cosine_distance<T: Scalar>(x: &[T], mu: &[T]) -> Result<f64> {
    if x.len() != mu.len() {
        return Err(Error::shape(format!("vectors of length {} and {}", x.len(), mu.len())));
    }
    let (mut dot, mut nx, mut nm) = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in x.iter().zip(mu) {
        let (a, b) = (a.as_f64(), b.as_f64());
        dot += a * b;
        nx += a * a;
        nm += b * b;
    }
    if !(nx > 0.0 && nm > 0.0 && nx.is_finite() && nm.is_finite()) {
        return Err(Error::domain("cosine distance needs nonzero finite vectors"));
    }
    Ok((1.0 - dot / (nx.sqrt() * nm.sqrt())).clamp(0.0, 2.0))
}

/// Distance from every row of `features` to its nearest class mean.
pub fn min_cosine_distances<T: Scalar>(features: ArrayView2<'_, T>, means: &ClassMeans<T>) -> Result<Vec<f64>> {
    if means.is_empty() {
        return Err(Error::domain("no class means"));
    }
    if features.ncols() != means.dim() {
        return Err(Error::shape(format!(
            "features have {} columns, class means {}",
            features.ncols(),
            means.dim()
        )));
    }
    features
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let row = row.to_vec();
            means
                .iter()
                .map(|(_, m)| cosine_distance(&row, &m.unit))
                .try_fold(f64::INFINITY, |best, d| Ok(best.min(d?)))
                .map_err(|e: Error| Error::domain(format!("feature row {i}: {e}")))
        })
        .collect()
}

/// Mean predicted probability per nearest-class-mean distance bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedAnalysis {
    pub bin_width: f64,
    /// `counts.len() + 1` edges starting at 0; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// `None` for empty bins.
    pub mean_prob: Vec<Option<f64>>,
}

impl BinnedAnalysis {
    /// Bins `values` by `distances` over `[0, max distance]`.
    pub fn from_distances(distances: &[f64], values: &[f64], bin_width: f64) -> Result<Self> {
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(Error::domain(format!("bin width must be positive, got {bin_width}")));
        }
        if distances.len() != values.len() {
            return Err(Error::shape(format!(
                "{} distances but {} values",
                distances.len(),
                values.len()
            )));
        }
        let max = distances.iter().copied().fold(0.0f64, f64::max);
        let n_bins = ((max / bin_width).ceil() as usize).max(1);
        let mut sums = vec![0.0; n_bins];
        let mut counts = vec![0usize; n_bins];
        for (&d, &v) in distances.iter().zip(values) {
            let b = ((d / bin_width) as usize).min(n_bins - 1);
            sums[b] += v;
            counts[b] += 1;
        }
        Ok(BinnedAnalysis {
            bin_width,
            edges: (0..=n_bins).map(|i| i as f64 * bin_width).collect(),
            mean_prob: sums
                .iter()
                .zip(&counts)
                .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
                .collect(),
            counts,
        })
    }

    pub fn num_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total_count(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Count-weighted mean probability over bins starting at or beyond `distance`.
    pub fn mean_prob_beyond(&self, distance: f64) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for ((&lo, &c), m) in self.edges.iter().zip(&self.counts).zip(&self.mean_prob) {
            if lo >= distance - 1e-12 {
                if let Some(m) = m {
                    sum += m * c as f64;
                    n += c;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// CSV with header `bin_lo,bin_hi,count,mean_prob`; empty bins print `nan`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count,mean_prob\n");
        for (i, (&c, m)) in self.counts.iter().zip(&self.mean_prob).enumerate() {
            let mean = m.map_or_else(|| "nan".to_string(), |m| m.to_string());
            writeln!(out, "{},{},{},{}", self.edges[i], self.edges[i + 1], c, mean).expect("writing to a String");
        }
        out
    }
}

/// Groups rows of `features` by cosine distance to the nearest class mean
/// and averages `probs` within each bin.
pub fn extrapolation_analysis<T: Scalar>(
    features: ArrayView2<'_, T>,
    means: &ClassMeans<T>,
    probs: &[T],
    bin_width: f64,
) -> Result<BinnedAnalysis> {
    if features.nrows() != probs.len() {
        return Err(Error::shape(format!(
            "{} feature rows but {} probabilities",
            features.nrows(),
            probs.len()
        )));
    }
    let probs: Vec<f64> = probs.iter().map(|p| p.as_f64()).collect();
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::domain(format!("probabilities must lie in [0, 1], got {p}")));
    }
    let distances = min_cosine_distances(features, means)?;
    BinnedAnalysis::from_distances(&distances, &probs, bin_width)
}
