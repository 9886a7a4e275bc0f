// SPDX-License-Identifier: Apache-2.0

//! Separable Gaussian blur and bilinear resampling of rank-2 maps.

use crate::error::{Error, Result};
use crate::numkernel::Tensor;
use crate::Scalar;

/// Normalized 1-D Gaussian taps for offsets `-r..=r`, `r = ⌈3σ⌉`.
///
/// The taps are renormalized after truncation so they sum to one.
pub fn gaussian_kernel<T: Scalar>(sigma: T) -> Result<Vec<T>> {
    if !(sigma.is_finite() && sigma > T::zero()) {
        return Err(Error::domain(format!("blur sigma must be finite and > 0, got {sigma}")));
    }
    let radius = (T::lit(3.0) * sigma).ceil().to_usize().unwrap_or(0).max(1);
    let two_var = T::lit(2.0) * sigma * sigma;
    let mut taps: Vec<T> = (0..=2 * radius)
        .map(|i| {
            let k = T::from_usize_lossy(i) - T::from_usize_lossy(radius);
            (-(k * k) / two_var).exp()
        })
        .collect();
    let total = taps.iter().fold(T::zero(), |acc, &w| acc + w);
    for w in &mut taps {
        *w = *w / total;
    }
    Ok(taps)
}

/// Symmetric reflection with the edge sample repeated: `… b a | a b c … | c b …`.
#[inline]
fn reflect(index: isize, len: usize) -> usize {
    let len = len as isize;
    let period = 2 * len;
    let mut i = index.rem_euclid(period);
    if i >= len {
        i = period - 1 - i;
    }
    i as usize
}

fn convolve_rows<T: Scalar>(src: &[T], dst: &mut [T], rows: usize, cols: usize, taps: &[T]) {
    let radius = (taps.len() / 2) as isize;
    for r in 0..rows {
        let line = &src[r * cols..(r + 1) * cols];
        for c in 0..cols {
            let mut acc = T::zero();
            for (t, &w) in taps.iter().enumerate() {
                let idx = reflect(c as isize + t as isize - radius, cols);
                acc = acc + w * line[idx];
            }
            dst[r * cols + c] = acc;
        }
    }
}

fn convolve_cols<T: Scalar>(src: &[T], dst: &mut [T], rows: usize, cols: usize, taps: &[T]) {
    let radius = (taps.len() / 2) as isize;
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = T::zero();
            for (t, &w) in taps.iter().enumerate() {
                let idx = reflect(r as isize + t as isize - radius, rows);
                acc = acc + w * src[idx * cols + c];
            }
            dst[r * cols + c] = acc;
        }
    }
}

/// Separable Gaussian blur of an `H×W` map with reflect padding.
pub fn gaussian_blur<T: Scalar>(map: &Tensor<T>, sigma: T) -> Result<Tensor<T>> {
    let (rows, cols) = map.dims2()?;
    if rows == 0 || cols == 0 {
        return Err(Error::domain("cannot blur an empty map"));
    }
    let taps = gaussian_kernel(sigma)?;
    let mut tmp = vec![T::zero(); rows * cols];
    convolve_rows(map.data(), &mut tmp, rows, cols, &taps);
    let mut out = vec![T::zero(); rows * cols];
    convolve_cols(&tmp, &mut out, rows, cols, &taps);
    Tensor::new(vec![rows, cols], out)
}

/// Source coordinate and blend weight for one output index under the
/// half-pixel-center mapping `src = (dst + 0.5)·(in/out) − 0.5`.
#[inline]
fn source_taps<T: Scalar>(dst: usize, in_len: usize, out_len: usize) -> (usize, usize, T) {
    if in_len == out_len {
        return (dst, dst, T::zero());
    }
    let scale = T::from_usize_lossy(in_len) / T::from_usize_lossy(out_len);
    let max = T::from_usize_lossy(in_len - 1);
    let src = ((T::from_usize_lossy(dst) + T::lit(0.5)) * scale - T::lit(0.5))
        .max(T::zero())
        .min(max);
    let lo = src.floor();
    let i0 = lo.to_usize().unwrap_or(0);
    let i1 = (i0 + 1).min(in_len - 1);
    (i0, i1, src - lo)
}

/// Bilinear resampling of an `H×W` map to `out_h×out_w` with half-pixel
/// centers and clamped borders.
pub fn upsample_bilinear<T: Scalar>(map: &Tensor<T>, out_h: usize, out_w: usize) -> Result<Tensor<T>> {
    let (rows, cols) = map.dims2()?;
    if rows == 0 || cols == 0 {
        return Err(Error::domain("cannot resample an empty map"));
    }
    if out_h == 0 || out_w == 0 {
        return Err(Error::domain(format!(
            "target size must be positive, got {out_h}×{out_w}"
        )));
    }
    let src = map.data();
    let col_taps: Vec<(usize, usize, T)> = (0..out_w).map(|c| source_taps(c, cols, out_w)).collect();
    let mut out = Vec::with_capacity(out_h * out_w);
    for r in 0..out_h {
        let (r0, r1, fy) = source_taps::<T>(r, rows, out_h);
        for &(c0, c1, fx) in &col_taps {
            let top = src[r0 * cols + c0] * (T::one() - fx) + src[r0 * cols + c1] * fx;
            let bottom = src[r1 * cols + c0] * (T::one() - fx) + src[r1 * cols + c1] * fx;
            out.push(top * (T::one() - fy) + bottom * fy);
        }
    }
    Tensor::new(vec![out_h, out_w], out)
}
