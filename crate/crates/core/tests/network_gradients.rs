// SPDX-License-Identifier: Apache-2.0

use lrood::model::{batch_objective, init_model, EstimatorModel, Head};
use lrood::numkernel::Rng;
use ndarray::Array2;

fn loss(model: &EstimatorModel<f64>, x: &Array2<f64>, y: &[u8], lambda: f64) -> f64 {
    let logits = model.forward(x.view()).unwrap();
    batch_objective(model.head(), logits.view(), y, lambda).unwrap().0.total
}

/// Largest relative gap between backprop and central differences over all parameters.
fn worst_gap(model: &EstimatorModel<f64>, x: &Array2<f64>, y: &[u8], lambda: f64) -> f64 {
    let h = 1e-4;
    let cache = model.forward_cached(x.view()).unwrap();
    let (_, d_logits) = batch_objective(model.head(), cache.logits().view(), y, lambda).unwrap();
    let grads = model.backward(&cache, &d_logits).unwrap();
    let mut worst: f64 = 0.0;
    for (li, g) in grads.iter().enumerate() {
        for (i, &a) in g.weight.iter().enumerate() {
            let eval = |d: f64| {
                let mut m = model.clone();
                *m.layers_mut()[li].weight.iter_mut().nth(i).unwrap() += d;
                loss(&m, x, y, lambda)
            };
            let n = (eval(h) - eval(-h)) / (2.0 * h);
            worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-8));
        }
        for (i, &a) in g.bias.iter().enumerate() {
            let eval = |d: f64| {
                let mut m = model.clone();
                m.layers_mut()[li].bias[i] += d;
                loss(&m, x, y, lambda)
            };
            let n = (eval(h) - eval(-h)) / (2.0 * h);
            worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-8));
        }
    }
    worst
}

fn batch(seed: u64, n: usize, d: usize) -> (Array2<f64>, Vec<u8>) {
    let mut rng = Rng::new(seed);
    let x = Array2::from_shape_simple_fn((n, d), || rng.standard_normal());
    let y = (0..n).map(|_| rng.below(2) as u8).collect();
    (x, y)
}

#[test]
fn evidential_backprop_matches_finite_differences() {
    let (x, y) = batch(1, 12, 3);
    let model: EstimatorModel<f64> = init_model(&[3, 6, 5, 2], 9, Head::Evidential).unwrap();
    for lambda in [0.0, 0.4, 1.0] {
        assert!(worst_gap(&model, &x, &y, lambda) < 1e-5);
    }
}

#[test]
fn sigmoid_backprop_matches_finite_differences() {
    let (x, y) = batch(2, 12, 3);
    let model: EstimatorModel<f64> = init_model(&[3, 7, 1], 4, Head::Sigmoid).unwrap();
    assert!(worst_gap(&model, &x, &y, 1.0) < 1e-5);
}
