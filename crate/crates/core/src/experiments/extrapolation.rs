// SPDX-License-Identifier: Apache-2.0

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{class_means, ClassMeans, SceneConfig, SceneGenerator};
use crate::error::{Error, Result};
use crate::eval::{cosine_distance, extrapolation_analysis, BinnedAnalysis, DEFAULT_BIN_WIDTH};
use crate::model::{init_model, train, AdamConfig, EstimatorModel, Head, TrainConfig};
use crate::numkernel::Rng;

/// Clustered features in `dim` dimensions: `n_id_classes` in-distribution
/// clusters against one proxy outlier cluster, probed far from all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationConfig {
    pub dim: usize,
    pub n_id_classes: usize,
    pub samples_per_class: usize,
    pub noise_std: f64,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub n_probes: usize,
    /// Probes are at least this cosine distance from every training cluster mean.
    pub min_probe_distance: f64,
    pub bin_width: f64,
    pub seed: u64,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        ExtrapolationConfig {
            dim: 16,
            n_id_classes: 3,
            samples_per_class: 3000,
            noise_std: 0.1,
            hidden: vec![32],
            epochs: 20,
            batch_size: 256,
            learning_rate: 1e-3,
            n_probes: 2000,
            min_probe_distance: 0.5,
            bin_width: DEFAULT_BIN_WIDTH,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtrapolationOutcome {
    pub edl: BinnedAnalysis,
    pub bce: BinnedAnalysis,
    /// Mean OOD probability over bins at or beyond `min_probe_distance`.
    pub edl_far_mean: f64,
    pub bce_far_mean: f64,
    pub edl_model: EstimatorModel<f64>,
    pub bce_model: EstimatorModel<f64>,
}

struct Split {
    x: Array2<f64>,
    labels: Vec<u8>,
    clusters: Vec<u8>,
}

fn draw(generator: &SceneGenerator, centers: &[Vec<f64>], per_center: usize, rng: &mut Rng) -> Split {
    let n_id = generator.prototypes().len();
    let dim = generator.dim();
    let mut x = Array2::zeros((centers.len() * per_center, dim));
    let mut labels = Vec::with_capacity(centers.len() * per_center);
    let mut clusters = Vec::with_capacity(centers.len() * per_center);
    let mut row = 0;
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per_center {
            let v = generator.sample_around(c, rng);
            x.row_mut(row).assign(&ndarray::ArrayView1::from(&v));
            labels.push(u8::from(k >= n_id));
            clusters.push(k as u8);
            row += 1;
        }
    }
    Split { x, labels, clusters }
}

/// Trains both heads on the clustered data and bins their OOD probability by
/// distance to the nearest training cluster mean.
pub fn run_extrapolation_benchmark(config: &ExtrapolationConfig) -> Result<ExtrapolationOutcome> {
    if config.n_probes == 0 || config.samples_per_class == 0 {
        return Err(Error::domain("probe and sample counts must be positive"));
    }
    let mut rng = Rng::with_stream(config.seed, 0);
    let scene_cfg = SceneConfig {
        noise_std: config.noise_std,
        ..SceneConfig::default()
    };
    let generator = SceneGenerator::new(config.dim, config.n_id_classes, scene_cfg, &mut rng)?;
    let proxy = generator.novel_direction(&[], &mut rng)?;
    let mut centers = generator.prototypes().to_vec();
    // The proxy cluster gets as many rows as all ID clusters together.
    let proxy_copies = vec![proxy; config.n_id_classes];
    centers.extend(proxy_copies);

    let train_split = draw(&generator, &centers, config.samples_per_class, &mut rng);
    let test_split = draw(&generator, &centers, config.samples_per_class / 4 + 1, &mut rng);
    let cluster_ids: Vec<u8> = train_split
        .clusters
        .iter()
        .map(|&k| (k as usize).min(config.n_id_classes) as u8)
        .collect();
    let means: ClassMeans<f64> = class_means(train_split.x.view(), &cluster_ids)?;

    let max_cos_sim = 1.0 - config.min_probe_distance;
    let mut probes = Array2::zeros((config.n_probes, config.dim));
    for i in 0..config.n_probes {
        let mut accepted = None;
        for _ in 0..generator.config().max_attempts {
            let v: Vec<f64> = (0..config.dim).map(|_| rng.standard_normal()).collect();
            let far = means
                .iter()
                .map(|(_, m)| cosine_distance(&v, &m.unit))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .all(|d| 1.0 - d <= max_cos_sim);
            if far {
                accepted = Some(v);
                break;
            }
        }
        let v = accepted.ok_or_else(|| Error::Infeasible("could not place a far probe".into()))?;
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        probes
            .row_mut(i)
            .assign(&ndarray::Array1::from_iter(v.iter().map(|a| a / norm)));
    }

    let mut seeds = Rng::with_stream(config.seed, 7);
    let train_cfg = |seed| TrainConfig {
        epochs: config.epochs,
        adam: AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
        batch_size: config.batch_size,
        seed,
        early_stopping: None,
    };
    let dims = |head: Head| {
        let mut d = vec![config.dim];
        d.extend(&config.hidden);
        d.push(head.output_width());
        d
    };
    let edl0 = init_model(&dims(Head::Evidential), seeds.next_u64(), Head::Evidential)?;
    let bce0 = init_model(&dims(Head::Sigmoid), seeds.next_u64(), Head::Sigmoid)?;
    let (edl_model, _) = train(
        edl0,
        train_split.x.view(),
        &train_split.labels,
        &train_cfg(seeds.next_u64()),
    )?;
    let (bce_model, _) = train(
        bce0,
        train_split.x.view(),
        &train_split.labels,
        &train_cfg(seeds.next_u64()),
    )?;

    let eval_x = ndarray::concatenate(ndarray::Axis(0), &[test_split.x.view(), probes.view()])
        .map_err(|e| Error::shape(e.to_string()))?;
    let analyse = |model: &EstimatorModel<f64>| -> Result<(BinnedAnalysis, f64)> {
        let p = model.predict_rows(eval_x.view())?.probability;
        let a = extrapolation_analysis(eval_x.view(), &means, &p, config.bin_width)?;
        let far = a
            .mean_prob_beyond(config.min_probe_distance)
            .ok_or_else(|| Error::Infeasible("no features in the far bins".into()))?;
        Ok((a, far))
    };
    let (edl, edl_far_mean) = analyse(&edl_model)?;
    let (bce, bce_far_mean) = analyse(&bce_model)?;
    Ok(ExtrapolationOutcome {
        edl,
        bce,
        edl_far_mean,
        bce_far_mean,
        edl_model,
        bce_model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_benchmark_runs_and_partitions() {
        let cfg = ExtrapolationConfig {
            samples_per_class: 400,
            epochs: 2,
            n_probes: 100,
            ..ExtrapolationConfig::default()
        };
        let out = run_extrapolation_benchmark(&cfg).unwrap();
        let n_eval = 2 * cfg.n_id_classes * (cfg.samples_per_class / 4 + 1) + cfg.n_probes;
        assert_eq!(out.edl.total_count(), n_eval);
        assert_eq!(out.bce.total_count(), n_eval);
        assert!((0.0..=1.0).contains(&out.edl_far_mean));
        assert!((0.0..=1.0).contains(&out.bce_far_mean));
        let again = run_extrapolation_benchmark(&cfg).unwrap();
        assert_eq!(again.edl, out.edl);
    }
}
