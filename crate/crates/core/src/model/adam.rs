// SPDX-License-Identifier: Apache-2.0

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use crate::model::{Dense, EstimatorModel};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected first and second moments.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    config: AdamConfig,
    first: Vec<Dense<T>>,
    second: Vec<Dense<T>>,
    step: i32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(model: &EstimatorModel<T>, config: AdamConfig) -> Self {
        let zeros = || -> Vec<Dense<T>> {
            model
                .layers()
                .iter()
                .map(|l| Dense::zeros(l.fan_in(), l.fan_out()))
                .collect()
        };
        Adam {
            config,
            first: zeros(),
            second: zeros(),
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    /// One update of every parameter of `model` from `grads`.
    pub fn step(&mut self, model: &mut EstimatorModel<T>, grads: &[Dense<T>]) {
        self.step += 1;
        let b1 = T::lit(self.config.beta1);
        let b2 = T::lit(self.config.beta2);
        let eps = T::lit(self.config.eps);
        let lr = T::lit(self.config.learning_rate);
        let one = T::one();
        let c1 = one - b1.powi(self.step);
        let c2 = one - b2.powi(self.step);

        let update = |p: &mut T, g: &T, m: &mut T, v: &mut T| {
            *m = b1 * *m + (one - b1) * *g;
            *v = b2 * *v + (one - b2) * *g * *g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        };

        for (((layer, g), m), v) in model
            .layers_mut()
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            Zip::from(&mut layer.weight)
                .and(&g.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .for_each(update);
            Zip::from(&mut layer.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(update);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, Head};

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut model: EstimatorModel<f64> = init_model(&[3, 5, 2], 1, Head::Evidential).unwrap();
        let before = model.clone();
        let mut opt = Adam::new(&model, AdamConfig::default());
        let zeros: Vec<Dense<f64>> = model
            .layers()
            .iter()
            .map(|l| Dense::zeros(l.fan_in(), l.fan_out()))
            .collect();
        for _ in 0..5 {
            opt.step(&mut model, &zeros);
        }
        assert_eq!(model, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // with bias correction the first step is lr · g/|g| (up to eps)
        let mut model: EstimatorModel<f64> = init_model(&[1, 1], 1, Head::Sigmoid).unwrap();
        let w0 = model.layers()[0].weight[[0, 0]];
        let mut opt = Adam::new(
            &model,
            AdamConfig {
                learning_rate: 0.1,
                ..AdamConfig::default()
            },
        );
        let mut g = vec![Dense::zeros(1, 1)];
        g[0].weight[[0, 0]] = 3.0;
        g[0].bias[0] = -0.5;
        opt.step(&mut model, &g);
        assert!((model.layers()[0].weight[[0, 0]] - (w0 - 0.1)).abs() < 1e-8);
        assert!((model.layers()[0].bias[0] - 0.1).abs() < 1e-8);
    }

    #[test]
    fn minimizes_a_quadratic() {
        // f(w) = (w − 2)², gradient 2(w − 2)
        let mut model: EstimatorModel<f64> = init_model(&[1, 1], 1, Head::Sigmoid).unwrap();
        let mut opt = Adam::new(
            &model,
            AdamConfig {
                learning_rate: 0.05,
                ..AdamConfig::default()
            },
        );
        for _ in 0..2000 {
            let w = model.layers()[0].weight[[0, 0]];
            let mut g = vec![Dense::zeros(1, 1)];
            g[0].weight[[0, 0]] = 2.0 * (w - 2.0);
            opt.step(&mut model, &g);
        }
        assert!((model.layers()[0].weight[[0, 0]] - 2.0).abs() < 1e-3);
    }
}
