// SPDX-License-Identifier: Apache-2.0

//! Score-map post-processing, detection metrics and the cosine-distance
//! extrapolation analysis.

mod extrapolation;
mod metrics;

pub use extrapolation::{
    cosine_distance, extrapolation_analysis, min_cosine_distances, BinnedAnalysis, DEFAULT_BIN_WIDTH,
};
pub use metrics::{average_precision, fpr_at_95_tpr, Metrics, PRCurve};

use crate::error::{Error, Result};
use crate::numkernel::{gaussian_blur, upsample_bilinear, Tensor};
use crate::Scalar;

/// Blur width applied after upsampling score maps.
pub const DEFAULT_BLUR_SIGMA: f64 = 1.0;

/// `H×W` map of strictly positive, finite likelihood-ratio scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap<T> {
    scores: Tensor<T>,
}

impl<T: Scalar> ScoreMap<T> {
    pub fn new(scores: Tensor<T>) -> Result<Self> {
        scores.dims2()?;
        if let Some(bad) = scores.data().iter().find(|s| !(s.is_finite() && **s > T::zero())) {
            return Err(Error::domain(format!(
                "score maps must be finite and positive, found {bad}"
            )));
        }
        Ok(ScoreMap { scores })
    }

    pub fn height(&self) -> usize {
        self.scores.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.scores.shape()[1]
    }

    pub fn scores(&self) -> &Tensor<T> {
        &self.scores
    }

    pub fn into_tensor(self) -> Tensor<T> {
        self.scores
    }
}

/// Bilinear upsampling to `out_h×out_w` followed by a Gaussian blur.
pub fn postprocess_scores<T: Scalar>(raw: &ScoreMap<T>, out_h: usize, out_w: usize, sigma: T) -> Result<ScoreMap<T>> {
    let resized = upsample_bilinear(&raw.scores, out_h, out_w)?;
    ScoreMap::new(gaussian_blur(&resized, sigma)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::gaussian_kernel;
    use proptest::prelude::*;

    #[test]
    fn constant_map_stays_constant() {
        let raw = ScoreMap::new(Tensor::filled(vec![3, 4], 2.5f64)).unwrap();
        let out = postprocess_scores(&raw, 12, 16, 1.0).unwrap();
        assert_eq!((out.height(), out.width()), (12, 16));
        for &v in out.scores().data() {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn same_size_impulse_is_the_blur_kernel() {
        let mut t = Tensor::filled(vec![15, 15], 1e-3f64);
        t.data_mut()[7 * 15 + 7] = 1.0 + 1e-3;
        let out = postprocess_scores(&ScoreMap::new(t).unwrap(), 15, 15, 1.0).unwrap();
        let k = gaussian_kernel(1.0).unwrap();
        let r = k.len() / 2;
        let mut mass = 0.0;
        for i in 0..15usize {
            for j in 0..15usize {
                let v = out.scores().data()[i * 15 + j] - 1e-3;
                let (di, dj) = (i as isize - 7, j as isize - 7);
                let expect = if di.unsigned_abs() <= r && dj.unsigned_abs() <= r {
                    k[(di + r as isize) as usize] * k[(dj + r as isize) as usize]
                } else {
                    0.0
                };
                assert!((v - expect).abs() < 1e-12, "({i},{j}) {v} vs {expect}");
                mass += v;
            }
        }
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_maps_and_shapes() {
        assert!(ScoreMap::new(Tensor::filled(vec![2, 2], 0.0)).is_err());
        assert!(ScoreMap::new(Tensor::filled(vec![2, 2], f64::INFINITY)).is_err());
        assert!(ScoreMap::new(Tensor::filled(vec![4], 1.0)).is_err());
        let raw = ScoreMap::new(Tensor::filled(vec![2, 2], 1.0)).unwrap();
        assert!(postprocess_scores(&raw, 0, 3, 1.0).is_err());
        assert!(postprocess_scores(&raw, 3, 3, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn postprocessing_keeps_scores_positive(
            vals in prop::collection::vec(-30.0f64..30.0, 12),
            out_h in 1usize..20,
            out_w in 1usize..20,
            sigma in 0.3f64..3.0,
        ) {
            let t = Tensor::new(vec![3, 4], vals.into_iter().map(f64::exp).collect()).unwrap();
            let out = postprocess_scores(&ScoreMap::new(t).unwrap(), out_h, out_w, sigma).unwrap();
            prop_assert!(out.scores().data().iter().all(|&v| v > 0.0 && v.is_finite()));
        }
    }
}
