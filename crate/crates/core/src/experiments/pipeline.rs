// SPDX-License-Identifier: Apache-2.0

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{anomaly_mix, FeatureMap, LabelMap, MixConfig, SceneConfig, SceneGenerator, UNLABELED};
use crate::error::{Error, Result};
use crate::eval::{postprocess_scores, Metrics, ScoreMap};
use crate::model::{init_model, predict_map, train, AdamConfig, EstimatorModel, Head, TrainConfig, TrainReport};
use crate::numkernel::{Rng, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub height: usize,
    pub width: usize,
    pub dim: usize,
    pub n_id_classes: usize,
    pub n_train_scenes: usize,
    pub n_test_scenes: usize,
    /// Outlier objects are drawn with sides in `[object_min, object_max]`
    /// before the compositor rescales them.
    pub object_min: usize,
    pub object_max: usize,
    /// Proxy objects pasted into each training scene, each from its own direction.
    pub proxies_per_scene: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    pub noise_std: f64,
    pub hidden: Vec<usize>,
    pub head: Head,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub blur_sigma: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            height: 64,
            width: 64,
            dim: 16,
            n_id_classes: 4,
            n_train_scenes: 20,
            n_test_scenes: 5,
            object_min: 12,
            object_max: 28,
            proxies_per_scene: 3,
            scale_min: 0.5,
            scale_max: 2.0,
            noise_std: 0.1,
            hidden: vec![256, 64],
            head: Head::Evidential,
            epochs: 10,
            batch_size: 1024,
            learning_rate: 1e-3,
            blur_sigma: 1.0,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            batch_size: self.batch_size,
            seed: self.seed,
            early_stopping: None,
        }
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.dim];
        dims.extend(&self.hidden);
        dims.push(self.head.output_width());
        dims
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::domain("scene size must be positive"));
        }
        if self.proxies_per_scene == 0 {
            return Err(Error::domain("training scenes need at least one proxy object"));
        }
        if self.n_train_scenes == 0 || self.n_test_scenes == 0 {
            return Err(Error::domain("need at least one training and one test scene"));
        }
        if self.object_min == 0 || self.object_min > self.object_max {
            return Err(Error::domain(
                "object size range must satisfy 0 < object_min <= object_max",
            ));
        }
        if self.blur_sigma.is_nan() || self.blur_sigma <= 0.0 {
            return Err(Error::domain("blur sigma must be positive"));
        }
        self.train_config().validate()
    }
}

/// Features with their binary OOD labels and per-pixel class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScene {
    pub features: FeatureMap<f64>,
    pub labels: LabelMap,
    /// [`UNLABELED`] on pasted pixels.
    pub class_ids: Tensor<u8>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    /// Scenes with proxy outliers, each from its own random direction.
    pub train: Vec<LabeledScene>,
    /// Scenes with outliers from one cluster no proxy comes near.
    pub test: Vec<LabeledScene>,
    pub prototypes: Vec<Vec<f64>>,
    pub test_ood_direction: Vec<f64>,
}

/// A fresh scene with one outlier object pasted per entry of `directions`.
fn composite_scene(
    generator: &SceneGenerator,
    config: &PipelineConfig,
    directions: &[Vec<f64>],
    mix: &MixConfig,
    rng: &mut Rng,
) -> Result<LabeledScene> {
    let scene = generator.scene(config.height, config.width, rng)?;
    let mut features = scene.features;
    let mut class_ids = scene.class_ids;
    let span = config.object_max - config.object_min + 1;
    for direction in directions {
        let oh = config.object_min + rng.below(span);
        let ow = config.object_min + rng.below(span);
        let object = generator.outlier_object(oh, ow, direction, rng)?;
        let composite = anomaly_mix(&features, &object, mix, rng)?;
        for (id, &l) in class_ids.data_mut().iter_mut().zip(composite.labels.data()) {
            if l == 1 {
                *id = UNLABELED;
            }
        }
        features = composite.image;
    }
    let labels = class_ids.data().iter().map(|&c| u8::from(c == UNLABELED)).collect();
    Ok(LabeledScene {
        labels: LabelMap::new(config.height, config.width, labels)?,
        features,
        class_ids,
    })
}

/// Training scenes with proxy outliers and held-out scenes with outliers
/// from a separate cluster, all sharing the same in-distribution classes.
pub fn build_synthetic_dataset(config: &PipelineConfig) -> Result<SyntheticDataset> {
    config.validate()?;
    let mut rng = Rng::with_stream(config.seed, 0);
    let scene_cfg = SceneConfig {
        noise_std: config.noise_std,
        ..SceneConfig::default()
    };
    let generator = SceneGenerator::new(config.dim, config.n_id_classes, scene_cfg, &mut rng)?;
    let test_dir = generator.novel_direction(&[], &mut rng)?;
    let mix = MixConfig {
        scale_min: config.scale_min,
        scale_max: config.scale_max,
        ..MixConfig::default()
    };
    let avoid = [test_dir.clone()];
    let train = (0..config.n_train_scenes)
        .map(|_| {
            let proxies = (0..config.proxies_per_scene)
                .map(|_| generator.novel_direction(&avoid, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            composite_scene(&generator, config, &proxies, &mix, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let test = (0..config.n_test_scenes)
        .map(|_| composite_scene(&generator, config, std::slice::from_ref(&test_dir), &mix, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticDataset {
        train,
        test,
        prototypes: generator.prototypes().to_vec(),
        test_ood_direction: test_dir,
    })
}

/// Stacks the pixels of several scenes into one `N×D` matrix with labels.
pub fn stack_pixels<'a>(
    scenes: impl IntoIterator<Item = (&'a FeatureMap<f64>, &'a LabelMap)>,
) -> Result<(Array2<f64>, Vec<u8>)> {
    let mut rows: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for (f, l) in scenes {
        if (f.height(), f.width()) != (l.height(), l.width()) {
            return Err(Error::shape(format!(
                "features are {}×{} but labels {}×{}",
                f.height(),
                f.width(),
                l.height(),
                l.width()
            )));
        }
        if *dim.get_or_insert(f.dim()) != f.dim() {
            return Err(Error::shape(format!(
                "feature maps have {} and {} channels",
                dim.unwrap_or(0),
                f.dim()
            )));
        }
        rows.extend_from_slice(f.tensor().data());
        labels.extend_from_slice(l.data());
    }
    let dim = dim.ok_or_else(|| Error::domain("no scenes to stack"))?;
    let x = Array2::from_shape_vec((labels.len(), dim), rows).expect("rows are whole pixels");
    Ok((x, labels))
}

/// Likelihood-ratio score map of `features`, upsampled and blurred.
pub fn score_scene(
    model: &EstimatorModel<f64>,
    features: &FeatureMap<f64>,
    out_h: usize,
    out_w: usize,
    sigma: f64,
) -> Result<ScoreMap<f64>> {
    let raw = ScoreMap::new(predict_map(model, features)?.lr_scores()?)?;
    postprocess_scores(&raw, out_h, out_w, sigma)
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub metrics: Metrics,
    pub report: TrainReport,
    pub model: EstimatorModel<f64>,
}

/// Builds the dataset, trains on the training scenes and scores the test scenes.
pub fn run_synthetic_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    let data = build_synthetic_dataset(config)?;
    let (x, y) = stack_pixels(data.train.iter().map(|s| (&s.features, &s.labels)))?;
    let model0 = init_model(&config.layer_dims(), config.seed, config.head)?;
    let (model, report) = train(model0, x.view(), &y, &config.train_config())?;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for scene in &data.test {
        let s = score_scene(&model, &scene.features, config.height, config.width, config.blur_sigma)?;
        scores.extend_from_slice(s.scores().data());
        labels.extend_from_slice(scene.labels.data());
    }
    Ok(PipelineOutcome {
        metrics: Metrics::compute(&scores, &labels)?,
        report,
        model,
    })
}
