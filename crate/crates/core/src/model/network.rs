// SPDX-License-Identifier: Apache-2.0

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};
use crate::model::Head;
use crate::numkernel::Rng;
use crate::Scalar;

/// Negative-side slope of the leaky ReLU.
pub const DEFAULT_SLOPE: f64 = 0.01;

/// Affine layer `y = x·W + b` with `W` stored `in×out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.ncols()
    }

    fn apply(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        x.dot(&self.weight) + &self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorModel<T> {
    layers: Vec<Dense<T>>,
    slope: T,
    head: Head,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// Input to each layer; `inputs[0]` is the batch itself.
    inputs: Vec<Array2<T>>,
    /// Pre-activations of every hidden layer.
    pre: Vec<Array2<T>>,
    logits: Array2<T>,
}

impl<T> ForwardCache<T> {
    pub fn logits(&self) -> &Array2<T> {
        &self.logits
    }
}

/// Parameter gradients, one [`Dense`] per layer.
pub type Gradients<T> = Vec<Dense<T>>;

/// Network with widths `layer_dims = [D, hidden.., out]`, weights drawn from
/// `U(−√(6/fan_in), √(6/fan_in))` in layer order and zero biases.
pub fn init_model<T: Scalar>(layer_dims: &[usize], seed: u64, head: Head) -> Result<EstimatorModel<T>> {
    if layer_dims.len() < 2 {
        return Err(Error::domain(format!(
            "need input and output widths, got {layer_dims:?}"
        )));
    }
    if layer_dims.contains(&0) {
        return Err(Error::domain(format!(
            "layer widths must be positive, got {layer_dims:?}"
        )));
    }
    let out = *layer_dims.last().expect("len >= 2");
    if out != head.output_width() {
        return Err(Error::domain(format!(
            "{head} head needs output width {}, got {out}",
            head.output_width()
        )));
    }
    let mut rng = Rng::new(seed);
    let layers = layer_dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let weight = Array2::from_shape_simple_fn((fan_in, fan_out), || T::lit(rng.uniform_in(-bound, bound)));
            Dense {
                weight,
                bias: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(EstimatorModel {
        layers,
        slope: T::lit(DEFAULT_SLOPE),
        head,
    })
}

impl<T: Scalar> EstimatorModel<T> {
    /// Assembles a model from explicit layers.
    pub fn from_layers(layers: Vec<Dense<T>>, slope: T, head: Head) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::domain("model needs at least one layer"))?;
        if first.fan_in() == 0 {
            return Err(Error::domain("input width must be positive"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::shape(format!(
                    "layer {i} emits {} but layer {} takes {}",
                    pair[0].fan_out(),
                    i + 1,
                    pair[1].fan_in()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.fan_out() {
                return Err(Error::shape(format!(
                    "layer {i} bias length {} != width {}",
                    l.bias.len(),
                    l.fan_out()
                )));
            }
        }
        let out = layers.last().expect("nonempty").fan_out();
        if out != head.output_width() {
            return Err(Error::domain(format!(
                "{head} head needs output width {}, got {out}",
                head.output_width()
            )));
        }
        if !slope.is_finite() {
            return Err(Error::domain("leaky ReLU slope must be finite"));
        }
        Ok(EstimatorModel { layers, slope, head })
    }

    pub fn with_slope(mut self, slope: T) -> Self {
        self.slope = slope;
        self
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn slope(&self) -> T {
        self.slope
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    /// `[D, hidden.., out]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Dense::fan_out))
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &ArrayView2<'_, T>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!(
                "model takes {} features per row, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    fn activate(&self, z: &Array2<T>) -> Array2<T> {
        let slope = self.slope;
        z.mapv(|v| if v > T::zero() { v } else { slope * v })
    }

    /// Logits for every row of `x` (`N×D` → `N×out`).
    pub fn forward(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        self.check_input(&x)?;
        let mut h = self.layers[0].apply(x);
        for layer in &self.layers[1..] {
            h = layer.apply(self.activate(&h).view());
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, T>) -> Result<ForwardCache<T>> {
        self.check_input(&x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        inputs.push(x.to_owned());
        let mut z = self.layers[0].apply(x);
        for layer in &self.layers[1..] {
            let a = self.activate(&z);
            let next = layer.apply(a.view());
            pre.push(z);
            inputs.push(a);
            z = next;
        }
        Ok(ForwardCache { inputs, pre, logits: z })
    }

    /// Backpropagates `d_logits` (∂loss/∂logits, same shape as the logits).
    pub fn backward(&self, cache: &ForwardCache<T>, d_logits: &Array2<T>) -> Result<Gradients<T>> {
        if d_logits.dim() != cache.logits.dim() {
            return Err(Error::shape(format!(
                "logit gradient {:?} does not match logits {:?}",
                d_logits.dim(),
                cache.logits.dim()
            )));
        }
        let mut grads: Vec<Dense<T>> = Vec::with_capacity(self.layers.len());
        let mut delta = d_logits.clone();
        for l in (0..self.layers.len()).rev() {
            let weight = cache.inputs[l].t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weight.t());
                let slope = self.slope;
                Zip::from(&mut back).and(&cache.pre[l - 1]).for_each(|g, &z| {
                    if z <= T::zero() {
                        *g = *g * slope;
                    }
                });
                delta = back;
            }
            grads.push(Dense { weight, bias });
        }
        grads.reverse();
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let a: EstimatorModel<f64> = init_model(&[4, 8, 2], 3, Head::Evidential).unwrap();
        let b: EstimatorModel<f64> = init_model(&[4, 8, 2], 3, Head::Evidential).unwrap();
        assert_eq!(a, b);
        assert!(a.layers().iter().all(|l| l.bias.iter().all(|&v| v == 0.0)));
        let bound = (6.0f64 / 4.0).sqrt();
        assert!(a.layers()[0].weight.iter().all(|w| w.abs() <= bound));
        let c: EstimatorModel<f64> = init_model(&[4, 8, 2], 4, Head::Evidential).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.layer_dims(), vec![4, 8, 2]);
        assert_eq!(a.num_parameters(), 4 * 8 + 8 + 8 * 2 + 2);
    }

    #[test]
    fn init_rejects_bad_layouts() {
        assert!(init_model::<f64>(&[4], 0, Head::Evidential).is_err());
        assert!(init_model::<f64>(&[4, 0, 2], 0, Head::Evidential).is_err());
        assert!(init_model::<f64>(&[4, 8, 2], 0, Head::Sigmoid).is_err());
        assert!(init_model::<f64>(&[4, 8, 1], 0, Head::Sigmoid).is_ok());
    }

    #[test]
    fn zero_input_yields_final_bias() {
        let m: EstimatorModel<f64> = init_model(&[5, 7, 3, 2], 1, Head::Evidential).unwrap();
        let out = m.forward(Array2::zeros((3, 5)).view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_layer_is_affine() {
        let layer = Dense {
            weight: array![[1.0, -2.0], [0.5, 3.0], [0.0, 1.0]],
            bias: array![0.25, -1.0],
        };
        let m = EstimatorModel::from_layers(vec![layer], 0.01, Head::Evidential).unwrap();
        let x = array![[1.0, 2.0, 3.0], [-1.0, 0.0, 4.0]];
        let out = m.forward(x.view()).unwrap();
        // hand multiply
        assert_eq!(
            out,
            array![
                [1.0 + 1.0 + 0.0 + 0.25, -2.0 + 6.0 + 3.0 - 1.0],
                [-1.0 + 0.25, 2.0 + 4.0 - 1.0]
            ]
        );
    }

    #[test]
    fn leaky_relu_scales_negative_preactivations() {
        let l1 = Dense {
            weight: array![[1.0]],
            bias: array![0.0],
        };
        let l2 = Dense {
            weight: array![[1.0, 2.0]],
            bias: array![0.0, 0.0],
        };
        let m = EstimatorModel::from_layers(vec![l1, l2], 0.1, Head::Evidential).unwrap();
        let out = m.forward(array![[-3.0f64], [2.0]].view()).unwrap();
        assert!((out[[0, 0]] + 0.3).abs() < 1e-15 && (out[[0, 1]] + 0.6).abs() < 1e-15);
        assert_eq!(out.row(1).to_vec(), vec![2.0, 4.0]);
    }

    #[test]
    fn rows_are_independent() {
        let m: EstimatorModel<f64> = init_model(&[3, 6, 2], 9, Head::Evidential).unwrap();
        let mut rng = Rng::new(2);
        let x = Array2::from_shape_simple_fn((10, 3), || rng.standard_normal());
        let out = m.forward(x.view()).unwrap();
        let perm = [3, 7, 0, 9, 1, 2, 8, 5, 4, 6];
        let px = x.select(Axis(0), &perm);
        let pout = m.forward(px.view()).unwrap();
        assert_eq!(pout, out.select(Axis(0), &perm));
        // a subset gives the same rows
        let sub = m.forward(x.select(Axis(0), &[4, 1]).view()).unwrap();
        assert_eq!(sub, out.select(Axis(0), &[4, 1]));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let m: EstimatorModel<f64> = init_model(&[3, 2], 0, Head::Evidential).unwrap();
        assert!(matches!(m.forward(Array2::zeros((2, 4)).view()), Err(Error::Shape(_))));
        let bad = vec![Dense::<f64>::zeros(3, 4), Dense::zeros(5, 2)];
        assert!(EstimatorModel::from_layers(bad, 0.01, Head::Evidential).is_err());
    }

    #[test]
    fn cached_forward_matches_plain_forward() {
        let m: EstimatorModel<f64> = init_model(&[4, 8, 5, 2], 6, Head::Evidential).unwrap();
        let mut rng = Rng::new(8);
        let x = Array2::from_shape_simple_fn((7, 4), || rng.standard_normal());
        let cache = m.forward_cached(x.view()).unwrap();
        assert_eq!(cache.logits(), &m.forward(x.view()).unwrap());
    }
}
