// SPDX-License-Identifier: Apache-2.0

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::numkernel::Tensor;
use crate::Scalar;

/// Dense `H×W×D` grid of feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T> {
    height: usize,
    width: usize,
    dim: usize,
    data: Tensor<T>,
}

impl<T: Scalar> FeatureMap<T> {
    /// Wraps a rank-3 `H×W×D` tensor.
    pub fn new(data: Tensor<T>) -> Result<Self> {
        let (height, width, dim) = match *data.shape() {
            [h, w, d] => (h, w, d),
            _ => {
                return Err(Error::shape(format!(
                    "feature map must be H×W×D, got {:?}",
                    data.shape()
                )))
            }
        };
        if height == 0 || width == 0 || dim == 0 {
            return Err(Error::shape(format!(
                "feature map dimensions must be positive, got {:?}",
                data.shape()
            )));
        }
        if !data.all_finite() {
            return Err(Error::domain("feature map contains non-finite values"));
        }
        Ok(FeatureMap {
            height,
            width,
            dim,
            data,
        })
    }

    pub fn from_vec(height: usize, width: usize, dim: usize, data: Vec<T>) -> Result<Self> {
        FeatureMap::new(Tensor::new(vec![height, width, dim], data)?)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.data
    }

    pub fn into_tensor(self) -> Tensor<T> {
        self.data
    }

    /// Pixels flattened row-major into an `(H·W)×D` matrix.
    pub fn pixels(&self) -> ArrayView2<'_, T> {
        ArrayView2::from_shape((self.num_pixels(), self.dim), self.data.data()).expect("shape checked")
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[T] {
        let start = (row * self.width + col) * self.dim;
        &self.data.data()[start..start + self.dim]
    }

    pub fn pixel_mut(&mut self, row: usize, col: usize) -> &mut [T] {
        let start = (row * self.width + col) * self.dim;
        &mut self.data.data_mut()[start..start + self.dim]
    }

    /// One channel as an `H×W` map.
    pub fn channel(&self, c: usize) -> Tensor<T> {
        let data = self.data.data().iter().skip(c).step_by(self.dim).copied().collect();
        Tensor::new(vec![self.height, self.width], data).expect("channel length")
    }

    /// Inverse of [`FeatureMap::channel`] over all channels.
    pub fn from_channels(channels: &[Tensor<T>]) -> Result<Self> {
        let first = channels.first().ok_or_else(|| Error::shape("no channels"))?;
        let (h, w) = first.dims2()?;
        let dim = channels.len();
        let mut data = vec![T::zero(); h * w * dim];
        for (c, ch) in channels.iter().enumerate() {
            if ch.dims2()? != (h, w) {
                return Err(Error::shape("channels differ in size"));
            }
            for (i, &v) in ch.data().iter().enumerate() {
                data[i * dim + c] = v;
            }
        }
        FeatureMap::from_vec(h, w, dim, data)
    }
}

/// Per-pixel binary ground truth, 1 = out-of-distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "label map {height}×{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some((i, v)) = data.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::domain(format!("label at pixel {i} is {v}, expected 0 or 1")));
        }
        Ok(LabelMap { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        LabelMap {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn from_tensor(t: &Tensor<u8>) -> Result<Self> {
        let (h, w) = t.dims2()?;
        LabelMap::new(h, w, t.data().to_vec())
    }

    pub fn to_tensor(&self) -> Tensor<u8> {
        Tensor::new(vec![self.height, self.width], self.data.clone()).expect("label shape")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value as u8;
    }

    /// Number of OOD pixels.
    pub fn count_ood(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_map_layout() {
        let fm = FeatureMap::from_vec(2, 3, 2, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(fm.pixel(1, 2), &[10.0, 11.0]);
        assert_eq!(fm.pixels().row(4).to_vec(), vec![8.0, 9.0]);
        assert_eq!(fm.channel(1).data(), &[1.0, 3.0, 5.0, 7.0, 9.0, 11.0]);
        let back = FeatureMap::from_channels(&[fm.channel(0), fm.channel(1)]).unwrap();
        assert_eq!(back, fm);
    }

    #[test]
    fn feature_map_rejects_bad_shapes() {
        assert!(FeatureMap::<f64>::from_vec(0, 3, 2, vec![]).is_err());
        assert!(FeatureMap::new(Tensor::<f64>::zeros(vec![2, 2])).is_err());
        assert!(FeatureMap::from_vec(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn label_map_is_binary() {
        assert!(LabelMap::new(1, 3, vec![0, 1, 2]).is_err());
        let lm = LabelMap::new(1, 3, vec![0, 1, 1]).unwrap();
        assert_eq!(lm.count_ood(), 2);
    }
}
