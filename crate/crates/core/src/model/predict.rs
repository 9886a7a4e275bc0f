// SPDX-License-Identifier: Apache-2.0

use ndarray::ArrayView2;

use crate::data::FeatureMap;
use crate::error::{Error, Result};
use crate::evidential::{
    dirichlet_from_logits, expected_prob, lr_from_sigmoid, lr_score, sigmoid, vacuity, DirichletParams,
};
use crate::model::{EstimatorModel, Head};
use crate::numkernel::Tensor;
use crate::Scalar;

/// Per-pixel Dirichlet parameters over an `H×W` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletMap<T> {
    height: usize,
    width: usize,
    params: Vec<DirichletParams<T>>,
}

impl<T: Scalar> DirichletMap<T> {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn params(&self) -> &[DirichletParams<T>] {
        &self.params
    }

    pub fn get(&self, row: usize, col: usize) -> DirichletParams<T> {
        self.params[row * self.width + col]
    }

    fn map(&self, f: impl Fn(DirichletParams<T>) -> T) -> Tensor<T> {
        Tensor::new(
            vec![self.height, self.width],
            self.params.iter().map(|&a| f(a)).collect(),
        )
        .expect("grid shape")
    }

    /// `α₁ / α₀` per pixel.
    pub fn lr_scores(&self) -> Tensor<T> {
        self.map(lr_score)
    }

    /// `α₁ / S` per pixel.
    pub fn ood_probability(&self) -> Tensor<T> {
        self.map(|a| expected_prob(a)[1])
    }

    pub fn vacuity(&self) -> Tensor<T> {
        self.map(vacuity)
    }
}

/// Per-pixel OOD probability of the sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap<T> {
    pub probability: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction<T> {
    Dirichlet(DirichletMap<T>),
    Probability(ProbabilityMap<T>),
}

impl<T: Scalar> Prediction<T> {
    /// Likelihood-ratio score map of either head.
    pub fn lr_scores(&self) -> Result<Tensor<T>> {
        match self {
            Prediction::Dirichlet(d) => Ok(d.lr_scores()),
            Prediction::Probability(p) => {
                let data = p
                    .probability
                    .data()
                    .iter()
                    .map(|&q| lr_from_sigmoid(q))
                    .collect::<Result<Vec<_>>>()?;
                Tensor::new(p.probability.shape().to_vec(), data)
            }
        }
    }

    pub fn ood_probability(&self) -> Tensor<T> {
        match self {
            Prediction::Dirichlet(d) => d.ood_probability(),
            Prediction::Probability(p) => p.probability.clone(),
        }
    }
}

/// Row-wise outputs of either head for an `N×D` batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RowOutputs<T> {
    /// `p(y = 1 | x)`.
    pub probability: Vec<T>,
    /// Likelihood-ratio score.
    pub lr: Vec<T>,
    /// Vacuity; evidential head only.
    pub vacuity: Option<Vec<T>>,
}

impl<T: Scalar> EstimatorModel<T> {
    /// Head outputs for each row of `x`.
    pub fn predict_rows(&self, x: ArrayView2<'_, T>) -> Result<RowOutputs<T>> {
        let logits = self.forward(x)?;
        match self.head() {
            Head::Evidential => {
                let params = logits
                    .rows()
                    .into_iter()
                    .map(|r| dirichlet_from_logits([r[0], r[1]]))
                    .collect::<Result<Vec<_>>>()?;
                Ok(RowOutputs {
                    probability: params.iter().map(|&a| expected_prob(a)[1]).collect(),
                    lr: params.iter().map(|&a| lr_score(a)).collect(),
                    vacuity: Some(params.iter().map(|&a| vacuity(a)).collect()),
                })
            }
            Head::Sigmoid => {
                let probability: Vec<T> = logits.column(0).iter().map(|&z| sigmoid(z)).collect();
                let lr = probability
                    .iter()
                    .map(|&p| lr_from_sigmoid(p))
                    .collect::<Result<Vec<_>>>()?;
                Ok(RowOutputs {
                    probability,
                    lr,
                    vacuity: None,
                })
            }
        }
    }
}

/// Applies the model to every pixel of `fmap`.
pub fn predict_map<T: Scalar>(model: &EstimatorModel<T>, fmap: &FeatureMap<T>) -> Result<Prediction<T>> {
    if fmap.dim() != model.input_dim() {
        return Err(Error::shape(format!(
            "feature map has {} channels, model takes {}",
            fmap.dim(),
            model.input_dim()
        )));
    }
    let logits = model.forward(fmap.pixels())?;
    let (height, width) = (fmap.height(), fmap.width());
    match model.head() {
        Head::Evidential => {
            let params = logits
                .rows()
                .into_iter()
                .map(|r| dirichlet_from_logits([r[0], r[1]]))
                .collect::<Result<Vec<_>>>()?;
            Ok(Prediction::Dirichlet(DirichletMap { height, width, params }))
        }
        Head::Sigmoid => {
            let data = logits.column(0).iter().map(|&z| sigmoid(z)).collect();
            Ok(Prediction::Probability(ProbabilityMap {
                probability: Tensor::new(vec![height, width], data)?,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, Dense};
    use crate::numkernel::Rng;

    fn random_map(h: usize, w: usize, d: usize, seed: u64) -> FeatureMap<f64> {
        let mut rng = Rng::new(seed);
        FeatureMap::from_vec(h, w, d, (0..h * w * d).map(|_| rng.standard_normal()).collect()).unwrap()
    }

    #[test]
    fn evidential_map_matches_rowwise_forward() {
        let model: EstimatorModel<f64> = init_model(&[3, 8, 2], 4, Head::Evidential).unwrap();
        let fmap = random_map(5, 6, 3, 1);
        let Prediction::Dirichlet(dm) = predict_map(&model, &fmap).unwrap() else {
            panic!("expected Dirichlet output");
        };
        assert_eq!((dm.height(), dm.width()), (5, 6));
        let logits = model.forward(fmap.pixels()).unwrap();
        for (i, a) in dm.params().iter().enumerate() {
            let [a0, a1] = a.alpha();
            assert!(a0 >= 1.0 && a1 >= 1.0);
            assert_eq!(a0, logits[[i, 0]].exp() + 1.0);
            assert_eq!(a1, logits[[i, 1]].exp() + 1.0);
        }
        let rows = model.predict_rows(fmap.pixels()).unwrap();
        assert_eq!(rows.lr, dm.lr_scores().into_data());
    }

    #[test]
    fn sigmoid_map_and_scores() {
        let model: EstimatorModel<f64> = init_model(&[3, 4, 1], 4, Head::Sigmoid).unwrap();
        let fmap = random_map(2, 3, 3, 2);
        let pred = predict_map(&model, &fmap).unwrap();
        let p = pred.ood_probability();
        let lr = pred.lr_scores().unwrap();
        for (q, r) in p.data().iter().zip(lr.data()) {
            assert!((r - q / (1.0 - q)).abs() < 1e-12 * r.max(1.0));
        }
    }

    #[test]
    fn zero_weight_model_gives_uniform_belief() {
        let layers = vec![Dense::<f64>::zeros(4, 3), Dense::zeros(3, 2)];
        let model = EstimatorModel::from_layers(layers, 0.01, Head::Evidential).unwrap();
        let pred = predict_map(&model, &random_map(3, 3, 4, 0)).unwrap();
        assert!(pred.lr_scores().unwrap().data().iter().all(|&s| s == 1.0));
        assert!(pred.ood_probability().data().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn channel_mismatch_is_an_error() {
        let model: EstimatorModel<f64> = init_model(&[3, 2], 0, Head::Evidential).unwrap();
        assert!(predict_map(&model, &random_map(2, 2, 4, 0)).is_err());
    }
}
