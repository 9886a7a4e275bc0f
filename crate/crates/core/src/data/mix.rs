// SPDX-License-Identifier: Apache-2.0

//! Cut-resize-paste compositing of an outlier object into an
//! in-distribution raster, producing the pseudo OOD label map.

use crate::data::{FeatureMap, LabelMap};
use crate::error::{Error, Result};
use crate::numkernel::{upsample_bilinear, Rng};
use crate::Scalar;

/// Outlier raster with a binary object mask of the same height and width.
#[derive(Debug, Clone, PartialEq)]
pub struct OodObject<T> {
    raster: FeatureMap<T>,
    mask: Vec<bool>,
}

impl<T: Scalar> OodObject<T> {
    pub fn new(raster: FeatureMap<T>, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != raster.num_pixels() {
            return Err(Error::shape(format!(
                "mask has {} pixels, raster {}",
                mask.len(),
                raster.num_pixels()
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::domain("object mask is empty"));
        }
        Ok(OodObject { raster, mask })
    }

    pub fn raster(&self) -> &FeatureMap<T> {
        &self.raster
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixConfig {
    /// Resize factor is drawn uniformly from `[scale_min, scale_max]`.
    pub scale_min: f64,
    pub scale_max: f64,
    /// Scale redraws allowed when the resized object does not fit.
    pub max_retries: usize,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig {
            scale_min: 0.5,
            scale_max: 2.0,
            max_retries: 16,
        }
    }
}

/// Where and how large the object was pasted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub scale: f64,
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Composite<T> {
    pub image: FeatureMap<T>,
    pub labels: LabelMap,
    pub placement: Placement,
}

fn nearest_index(dst: usize, in_len: usize, out_len: usize) -> usize {
    let src = ((dst as f64 + 0.5) * in_len as f64 / out_len as f64).floor() as usize;
    src.min(in_len - 1)
}

fn resize_mask(mask: &[bool], h: usize, w: usize, out_h: usize, out_w: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(out_h * out_w);
    for r in 0..out_h {
        let sr = nearest_index(r, h, out_h);
        for c in 0..out_w {
            out.push(mask[sr * w + nearest_index(c, w, out_w)]);
        }
    }
    out
}

fn resize_raster<T: Scalar>(raster: &FeatureMap<T>, out_h: usize, out_w: usize) -> Result<FeatureMap<T>> {
    if (out_h, out_w) == (raster.height(), raster.width()) {
        return Ok(raster.clone());
    }
    let channels = (0..raster.dim())
        .map(|c| upsample_bilinear(&raster.channel(c), out_h, out_w))
        .collect::<Result<Vec<_>>>()?;
    FeatureMap::from_channels(&channels)
}

/// Resizes `object` by a random factor and pastes its masked pixels at a
/// uniformly random location fully inside `target`.
///
/// Values are resampled bilinearly, the mask by nearest neighbour. The
/// returned label map is 1 exactly on the pasted mask pixels.
pub fn anomaly_mix<T: Scalar>(
    target: &FeatureMap<T>,
    object: &OodObject<T>,
    config: &MixConfig,
    rng: &mut Rng,
) -> Result<Composite<T>> {
    if object.raster.dim() != target.dim() {
        return Err(Error::shape(format!(
            "object has {} channels, target {}",
            object.raster.dim(),
            target.dim()
        )));
    }
    if !(config.scale_min > 0.0 && config.scale_min <= config.scale_max) {
        return Err(Error::domain(format!(
            "invalid scale range [{}, {}]",
            config.scale_min, config.scale_max
        )));
    }
    let (oh, ow) = (object.raster.height(), object.raster.width());
    for _ in 0..=config.max_retries {
        let scale = rng.uniform_in(config.scale_min, config.scale_max);
        let new_h = ((oh as f64 * scale).round() as usize).max(1);
        let new_w = ((ow as f64 * scale).round() as usize).max(1);
        if new_h > target.height() || new_w > target.width() {
            continue;
        }
        let mask = resize_mask(&object.mask, oh, ow, new_h, new_w);
        if !mask.iter().any(|&m| m) {
            continue;
        }
        let raster = resize_raster(&object.raster, new_h, new_w)?;
        let top = rng.below(target.height() - new_h + 1);
        let left = rng.below(target.width() - new_w + 1);

        let mut image = target.clone();
        let mut labels = LabelMap::zeros(target.height(), target.width());
        for r in 0..new_h {
            for c in 0..new_w {
                if mask[r * new_w + c] {
                    image.pixel_mut(top + r, left + c).copy_from_slice(raster.pixel(r, c));
                    labels.set(top + r, left + c, true);
                }
            }
        }
        return Ok(Composite {
            image,
            labels,
            placement: Placement {
                scale,
                top,
                left,
                height: new_h,
                width: new_w,
            },
        });
    }
    Err(Error::Infeasible(format!(
        "{oh}×{ow} object does not fit {}×{} target within {} scale draws",
        target.height(),
        target.width(),
        config.max_retries + 1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::Rng;
    use proptest::prelude::*;

    fn target(h: usize, w: usize) -> FeatureMap<f64> {
        FeatureMap::from_vec(h, w, 2, (0..h * w * 2).map(|i| -(i as f64) - 1.0).collect()).unwrap()
    }

    fn object(h: usize, w: usize, mask: Vec<bool>) -> OodObject<f64> {
        let raster = FeatureMap::from_vec(h, w, 2, (0..h * w * 2).map(|i| 100.0 + i as f64).collect()).unwrap();
        OodObject::new(raster, mask).unwrap()
    }

    #[test]
    fn unit_scale_paste_replaces_only_the_mask() {
        let t = target(10, 12);
        let mask = vec![true, false, true, true, true, false];
        let obj = object(2, 3, mask.clone());
        let cfg = MixConfig {
            scale_min: 1.0,
            scale_max: 1.0,
            ..MixConfig::default()
        };
        let out = anomaly_mix(&t, &obj, &cfg, &mut Rng::new(5)).unwrap();
        let p = out.placement;
        assert_eq!((p.height, p.width, p.scale), (2, 3, 1.0));
        assert_eq!(out.labels.count_ood(), 4);
        for r in 0..10 {
            for c in 0..12 {
                let inside = r >= p.top && r < p.top + 2 && c >= p.left && c < p.left + 3;
                let masked = inside && mask[(r - p.top) * 3 + (c - p.left)];
                assert_eq!(out.labels.data()[r * 12 + c] == 1, masked);
                if masked {
                    assert_eq!(out.image.pixel(r, c), obj.raster().pixel(r - p.top, c - p.left));
                } else {
                    assert_eq!(out.image.pixel(r, c), t.pixel(r, c));
                }
            }
        }
        // same seed, same offset
        let again = anomaly_mix(&t, &obj, &cfg, &mut Rng::new(5)).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn empty_mask_is_rejected() {
        let raster = FeatureMap::from_vec(2, 2, 1, vec![1.0; 4]).unwrap();
        assert!(matches!(OodObject::new(raster, vec![false; 4]), Err(Error::Domain(_))));
    }

    #[test]
    fn oversized_object_errors_after_retries() {
        let t = target(4, 4);
        let obj = object(6, 6, vec![true; 36]);
        let cfg = MixConfig {
            scale_min: 1.0,
            scale_max: 1.5,
            max_retries: 3,
        };
        assert!(matches!(
            anomaly_mix(&t, &obj, &cfg, &mut Rng::new(0)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn different_seeds_move_the_object() {
        let t = target(64, 64);
        let obj = object(4, 4, vec![true; 16]);
        let cfg = MixConfig::default();
        let placements: Vec<(usize, usize)> = (0..8)
            .map(|s| {
                let out = anomaly_mix(&t, &obj, &cfg, &mut Rng::new(s)).unwrap();
                (out.placement.top, out.placement.left)
            })
            .collect();
        assert!(placements.iter().any(|p| *p != placements[0]));
    }

    #[test]
    fn nearest_mask_scaling() {
        let mask = vec![true, false, false, true];
        let up = resize_mask(&mask, 2, 2, 4, 4);
        assert_eq!(up.iter().filter(|&&m| m).count(), 8);
        assert!(up[0] && up[5] && up[15] && !up[3]);
    }

    proptest! {
        #[test]
        fn label_support_is_pasted_footprint(seed in any::<u64>(), h in 2usize..7, w in 2usize..7) {
            let mut rng = Rng::new(seed);
            let mask: Vec<bool> = (0..h * w).map(|i| i == 0 || rng.uniform() < 0.6).collect();
            let obj = object(h, w, mask);
            let t = target(20, 20);
            let out = anomaly_mix(&t, &obj, &MixConfig::default(), &mut rng).unwrap();
            let p = out.placement;
            let resized = resize_mask(obj.mask(), h, w, p.height, p.width);
            prop_assert!(out.labels.data().iter().all(|&v| v <= 1));
            prop_assert_eq!(out.labels.count_ood(), resized.iter().filter(|&&m| m).count());
            for r in 0..20 {
                for c in 0..20 {
                    let inside = r >= p.top && r < p.top + p.height && c >= p.left && c < p.left + p.width;
                    let expect = inside && resized[(r - p.top) * p.width + (c - p.left)];
                    prop_assert_eq!(out.labels.data()[r * 20 + c] == 1, expect);
                }
            }
        }
    }
}
