// SPDX-License-Identifier: Apache-2.0

//! Synthetic data: the univariate two-Gaussian problem and clustered
//! feature-map scenes standing in for backbone features.

use crate::data::{FeatureMap, OodObject};
use crate::error::{Error, Result};
use crate::numkernel::{Rng, Tensor};

/// `n_per_class` draws from `N(mu0, 1)` labelled 0 and from `N(mu1, 1)`
/// labelled 1, shuffled together. Returns an `N×1` feature tensor.
pub fn gen_gaussian_1d(n_per_class: usize, mu0: f64, mu1: f64, seed: u64) -> Result<(Tensor<f64>, Vec<u8>)> {
    if n_per_class == 0 {
        return Err(Error::domain("n_per_class must be at least 1"));
    }
    let mut rng = Rng::new(seed);
    let mut rows: Vec<(f64, u8)> = Vec::with_capacity(2 * n_per_class);
    for _ in 0..n_per_class {
        rows.push((rng.normal(mu0, 1.0), 0));
    }
    for _ in 0..n_per_class {
        rows.push((rng.normal(mu1, 1.0), 1));
    }
    rng.shuffle(&mut rows);
    let (xs, ys): (Vec<f64>, Vec<u8>) = rows.into_iter().unzip();
    Ok((Tensor::new(vec![2 * n_per_class, 1], xs)?, ys))
}

/// Exact `N(x; mu1, 1) / N(x; mu0, 1)`.
pub fn analytic_gaussian_lr(x: f64, mu0: f64, mu1: f64) -> f64 {
    ((mu1 - mu0) * x + (mu0 * mu0 - mu1 * mu1) / 2.0).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    /// Minimum angle between any two class mean directions, degrees.
    pub min_angle_deg: f64,
    /// Per-dimension standard deviation of pixel features around their mean.
    pub noise_std: f64,
    /// Voronoi seed regions per class in each scene.
    pub regions_per_class: usize,
    /// Rejection-sampling budget per direction.
    pub max_attempts: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            min_angle_deg: 60.0,
            noise_std: 0.1,
            regions_per_class: 2,
            max_attempts: 10_000,
        }
    }
}

/// A synthetic feature map with its per-pixel class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub features: FeatureMap<f64>,
    /// `H×W` class ids; [`super::UNLABELED`] marks pasted outlier pixels.
    pub class_ids: Tensor<u8>,
}

/// Class-conditional Gaussian feature source shared by a set of scenes.
#[derive(Debug, Clone)]
pub struct SceneGenerator {
    dim: usize,
    prototypes: Vec<Vec<f64>>,
    config: SceneConfig,
}

fn random_unit(dim: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit direction at least `min_angle_deg` away from every vector in `avoid`.
pub(crate) fn separated_direction(
    dim: usize,
    avoid: &[&[f64]],
    min_angle_deg: f64,
    max_attempts: usize,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let max_cos = min_angle_deg.to_radians().cos();
    for _ in 0..max_attempts {
        let v = random_unit(dim, rng);
        if avoid.iter().all(|u| dot(u, &v) <= max_cos) {
            return Ok(v);
        }
    }
    Err(Error::Infeasible(format!(
        "no direction in {dim} dimensions {min_angle_deg}° from {} others after {max_attempts} attempts",
        avoid.len()
    )))
}

impl SceneGenerator {
    pub fn new(dim: usize, n_classes: usize, config: SceneConfig, rng: &mut Rng) -> Result<Self> {
        if dim < 2 {
            return Err(Error::domain(format!(
                "feature dimension must be at least 2, got {dim}"
            )));
        }
        if n_classes == 0 || n_classes >= super::UNLABELED as usize {
            return Err(Error::domain(format!("class count must be in 1..255, got {n_classes}")));
        }
        let mut prototypes: Vec<Vec<f64>> = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let avoid: Vec<&[f64]> = prototypes.iter().map(Vec::as_slice).collect();
            let v = separated_direction(dim, &avoid, config.min_angle_deg, config.max_attempts, rng)?;
            prototypes.push(v);
        }
        Ok(SceneGenerator {
            dim,
            prototypes,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    /// Unit mean direction of each in-distribution class.
    pub fn prototypes(&self) -> &[Vec<f64>] {
        &self.prototypes
    }

    /// Unit direction separated from every class prototype and from `extra`.
    pub fn novel_direction(&self, extra: &[Vec<f64>], rng: &mut Rng) -> Result<Vec<f64>> {
        let avoid: Vec<&[f64]> = self.prototypes.iter().chain(extra).map(Vec::as_slice).collect();
        separated_direction(
            self.dim,
            &avoid,
            self.config.min_angle_deg,
            self.config.max_attempts,
            rng,
        )
    }

    /// Feature vector drawn around `direction`.
    pub fn sample_around(&self, direction: &[f64], rng: &mut Rng) -> Vec<f64> {
        direction
            .iter()
            .map(|&m| m + self.config.noise_std * rng.standard_normal())
            .collect()
    }

    /// An `h×w` scene partitioned into Voronoi regions, each region one class.
    pub fn scene(&self, height: usize, width: usize, rng: &mut Rng) -> Result<Scene> {
        if height == 0 || width == 0 {
            return Err(Error::domain("scene size must be positive"));
        }
        let n_classes = self.prototypes.len();
        let n_seeds = n_classes * self.config.regions_per_class.max(1);
        let seeds: Vec<(f64, f64, u8)> = (0..n_seeds)
            .map(|i| {
                let r = rng.uniform() * height as f64;
                let c = rng.uniform() * width as f64;
                (r, c, (i % n_classes) as u8)
            })
            .collect();
        let mut ids = Vec::with_capacity(height * width);
        let mut data = Vec::with_capacity(height * width * self.dim);
        for r in 0..height {
            for c in 0..width {
                let (pr, pc) = (r as f64 + 0.5, c as f64 + 0.5);
                let class = seeds
                    .iter()
                    .map(|&(sr, sc, k)| ((sr - pr).powi(2) + (sc - pc).powi(2), k))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, k)| k)
                    .expect("at least one seed");
                ids.push(class);
                data.extend(self.sample_around(&self.prototypes[class as usize], rng));
            }
        }
        Ok(Scene {
            features: FeatureMap::from_vec(height, width, self.dim, data)?,
            class_ids: Tensor::new(vec![height, width], ids)?,
        })
    }

    /// Rectangular outlier raster around `direction` with an inscribed
    /// elliptical mask.
    pub fn outlier_object(
        &self,
        height: usize,
        width: usize,
        direction: &[f64],
        rng: &mut Rng,
    ) -> Result<OodObject<f64>> {
        if direction.len() != self.dim {
            return Err(Error::shape(format!(
                "direction has {} dims, expected {}",
                direction.len(),
                self.dim
            )));
        }
        let mut data = Vec::with_capacity(height * width * self.dim);
        for _ in 0..height * width {
            data.extend(self.sample_around(direction, rng));
        }
        let raster = FeatureMap::from_vec(height, width, self.dim, data)?;
        let (cy, cx) = (height as f64 / 2.0, width as f64 / 2.0);
        let mask = (0..height * width)
            .map(|i| {
                let dy = ((i / width) as f64 + 0.5 - cy) / cy;
                let dx = ((i % width) as f64 + 0.5 - cx) / cx;
                dy * dy + dx * dx <= 1.0
            })
            .collect();
        OodObject::new(raster, mask)
    }
}

/// One scene from a freshly seeded generator with default settings.
pub fn gen_synthetic_scene(height: usize, width: usize, dim: usize, n_id_classes: usize, seed: u64) -> Result<Scene> {
    let mut rng = Rng::new(seed);
    let generator = SceneGenerator::new(dim, n_id_classes, SceneConfig::default(), &mut rng)?;
    generator.scene(height, width, &mut rng)
}
