// SPDX-License-Identifier: Apache-2.0

//! One function per subcommand. Each first resolves and checks its whole
//! configuration and inputs, and only then creates the output directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use lrood::data::tensorfile::{find_f64, find_u8};
use lrood::data::{class_means, read_tensor_file, FeatureMap, LabelMap, Record};
use lrood::eval::{extrapolation_analysis, Metrics, DEFAULT_BIN_WIDTH, DEFAULT_BLUR_SIGMA};
use lrood::experiments::{
    build_synthetic_dataset, run_toy_gaussian, score_scene, stack_pixels, PipelineConfig, ToyConfig, ToySummary,
};
use lrood::model::{
    init_model, load_checkpoint, save_checkpoint, train, AdamConfig, EarlyStopping, EstimatorModel, Head, TrainConfig,
    TrainReport, DEFAULT_SLOPE,
};
use lrood::numkernel::Tensor;
use serde::Serialize;

use crate::config::ConfigMap;
use crate::error::{as_config, CliError, CliResult};
use crate::manifest::{Manifest, OutputDir};

pub const FEATURES: &str = "features";
pub const LABELS: &str = "labels";
pub const CLASS_IDS: &str = "class_ids";
pub const SCORES: &str = "scores";

fn read_records(path: &Path) -> CliResult<Vec<Record>> {
    read_tensor_file(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: lrood::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn features_of(path: &Path, records: &[Record]) -> CliResult<FeatureMap<f64>> {
    let t = in_file(path, find_f64(records, FEATURES))?;
    in_file(path, FeatureMap::new(t.clone()))
}

fn labels_of(path: &Path, records: &[Record]) -> CliResult<LabelMap> {
    let t = in_file(path, find_u8(records, LABELS))?;
    in_file(path, LabelMap::from_tensor(t))
}

fn load_model(path: &Path) -> CliResult<EstimatorModel<f64>> {
    load_checkpoint(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

fn no_seed(seed: Option<u64>, command: &str) -> CliResult<()> {
    match seed {
        Some(_) => Err(CliError::Config(format!("{command} does not use a seed"))),
        None => Ok(()),
    }
}

fn seed_of(cfg: &mut ConfigMap, seed: Option<u64>) -> CliResult<u64> {
    if let Some(s) = seed {
        cfg.set("seed", s);
    }
    cfg.get_or("seed", 0u64)
}

pub fn toy_gaussian(mut cfg: ConfigMap, out: &Path, seed: Option<u64>) -> CliResult<Manifest> {
    let d = ToyConfig::default();
    let toy = ToyConfig {
        seed: seed_of(&mut cfg, seed)?,
        n_per_class: cfg.get_or("n_per_class", d.n_per_class)?,
        mu0: cfg.get_or("mu0", d.mu0)?,
        mu1: cfg.get_or("mu1", d.mu1)?,
        hidden: cfg.get_or("hidden", d.hidden)?,
        epochs: cfg.get_or("epochs", d.epochs)?,
        batch_size: cfg.get_or("batch_size", d.batch_size)?,
        learning_rate: cfg.get_or("learning_rate", d.learning_rate)?,
        patience: cfg.get_or("patience", d.patience)?,
        val_fraction: cfg.get_or("val_fraction", d.val_fraction)?,
        grid_min: cfg.get_or("grid_min", d.grid_min)?,
        grid_max: cfg.get_or("grid_max", d.grid_max)?,
        grid_step: cfg.get_or("grid_step", d.grid_step)?,
    };
    cfg.finish()?;
    toy.validate().map_err(as_config)?;
    if toy.n_per_class == 0 {
        return Err(CliError::Config("n_per_class must be at least 1".into()));
    }

    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(flatten)]
        summary: &'a ToySummary,
        edl_report: &'a TrainReport,
        bce_report: &'a TrainReport,
    }

    let result = run_toy_gaussian(&toy)?;
    let mut dir = OutputDir::create(out)?;
    dir.write("toy_gaussian.csv", result.to_csv().as_bytes())?;
    dir.write_json(
        "summary.json",
        &Summary {
            summary: &result.summary,
            edl_report: &result.edl_report,
            bce_report: &result.bce_report,
        },
    )?;
    dir.finish("toy-gaussian", &cfg)
}

pub fn gen_synthetic(mut cfg: ConfigMap, out: &Path, seed: Option<u64>) -> CliResult<Manifest> {
    let d = PipelineConfig::default();
    let pc = PipelineConfig {
        seed: seed_of(&mut cfg, seed)?,
        height: cfg.get_or("height", d.height)?,
        width: cfg.get_or("width", d.width)?,
        dim: cfg.get_or("dim", d.dim)?,
        n_id_classes: cfg.get_or("n_id_classes", d.n_id_classes)?,
        n_train_scenes: cfg.get_or("n_train_scenes", d.n_train_scenes)?,
        n_test_scenes: cfg.get_or("n_test_scenes", d.n_test_scenes)?,
        object_min: cfg.get_or("object_min", d.object_min)?,
        object_max: cfg.get_or("object_max", d.object_max)?,
        proxies_per_scene: cfg.get_or("proxies_per_scene", d.proxies_per_scene)?,
        scale_min: cfg.get_or("scale_min", d.scale_min)?,
        scale_max: cfg.get_or("scale_max", d.scale_max)?,
        noise_std: cfg.get_or("noise_std", d.noise_std)?,
        ..d
    };
    cfg.finish()?;
    pc.validate().map_err(as_config)?;

    let data = build_synthetic_dataset(&pc)?;
    let mut dir = OutputDir::create(out)?;
    let splits = [("train", &data.train), ("test", &data.test)];
    for (split, scenes) in splits {
        for (i, s) in scenes.iter().enumerate() {
            let records = vec![
                Record::f64(FEATURES, s.features.tensor().clone()),
                Record::u8(LABELS, s.labels.to_tensor()),
                Record::u8(CLASS_IDS, s.class_ids.clone()),
            ];
            let bytes = lrood::data::tensorfile::encode(&records)?;
            dir.write(&format!("{split}_{i:03}.ulre"), &bytes)?;
        }
    }
    dir.finish("gen-synthetic", &cfg)
}

pub fn train_cmd(mut cfg: ConfigMap, out: &Path, seed: Option<u64>) -> CliResult<Manifest> {
    let seed = seed_of(&mut cfg, seed)?;
    let inputs = cfg.paths("inputs", true)?;
    let head: Head = cfg.get_or("head", Head::Evidential)?;
    let hidden: Vec<usize> = cfg.list_or("hidden", vec![256, 64])?;
    let slope: f64 = cfg.get_or("slope", DEFAULT_SLOPE)?;
    let defaults = TrainConfig::default();
    let early = cfg.get_or("early_stopping", false)?;
    let es_default = EarlyStopping::default();
    let patience = cfg.get_or("patience", es_default.patience)?;
    let val_fraction = cfg.get_or("val_fraction", es_default.val_fraction)?;
    let tc = TrainConfig {
        epochs: cfg.get_or("epochs", defaults.epochs)?,
        adam: AdamConfig {
            learning_rate: cfg.get_or("learning_rate", defaults.adam.learning_rate)?,
            ..defaults.adam
        },
        batch_size: cfg.get_or("batch_size", defaults.batch_size)?,
        seed,
        early_stopping: early.then_some(EarlyStopping { patience, val_fraction }),
    };
    cfg.finish()?;
    tc.validate().map_err(as_config)?;
    if !(slope.is_finite() && slope >= 0.0) {
        return Err(CliError::Config(format!(
            "slope must be a finite nonnegative number, got {slope}"
        )));
    }

    let mut pairs = Vec::with_capacity(inputs.len());
    for path in &inputs {
        let records = read_records(path)?;
        let f = features_of(path, &records)?;
        let l = labels_of(path, &records)?;
        pairs.push((f, l));
    }
    let (x, y) = stack_pixels(pairs.iter().map(|(f, l)| (f, l)))?;
    let mut dims = vec![x.ncols()];
    dims.extend(&hidden);
    dims.push(head.output_width());
    let model0 = init_model(&dims, seed, head).map_err(as_config)?.with_slope(slope);
    if x.nrows() < tc.batch_size {
        return Err(CliError::Config(format!(
            "{} training pixels is fewer than batch_size {}",
            x.nrows(),
            tc.batch_size
        )));
    }

    let (model, report) = train(model0, x.view(), &y, &tc)?;
    let mut dir = OutputDir::create(out)?;
    let bytes = lrood::data::tensorfile::encode(&lrood::model::model_to_records(&model)?)?;
    dir.write("model.ulre", &bytes)?;
    dir.write_json("train_report.json", &report)?;
    dir.finish("train", &cfg)
}

pub fn score(cfg: ConfigMap, out: &Path, seed: Option<u64>) -> CliResult<Manifest> {
    no_seed(seed, "score")?;
    let checkpoint = cfg
        .path("checkpoint")?
        .ok_or_else(|| CliError::Config("key \"checkpoint\" is required".into()))?;
    let inputs = cfg.paths("inputs", true)?;
    let out_h: Option<usize> = cfg.get_opt("out_height")?;
    let out_w: Option<usize> = cfg.get_opt("out_width")?;
    let sigma: f64 = cfg.get_or("sigma", DEFAULT_BLUR_SIGMA)?;
    let expected_head: Option<Head> = cfg.get_opt("head")?;
    cfg.finish()?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(CliError::Config(format!("sigma must be positive, got {sigma}")));
    }
    if out_h == Some(0) || out_w == Some(0) {
        return Err(CliError::Config("output size must be positive".into()));
    }
    let mut names = BTreeSet::new();
    for p in &inputs {
        if !names.insert(file_stem(p)) {
            return Err(CliError::Config(format!(
                "two inputs share the file name {}",
                file_stem(p)
            )));
        }
    }

    let model = load_model(&checkpoint)?;
    if let Some(h) = expected_head {
        if h != model.head() {
            return Err(CliError::Data(format!(
                "checkpoint {} has a {} head, config expects {h}",
                checkpoint.display(),
                model.head()
            )));
        }
    }
    let mut maps = Vec::with_capacity(inputs.len());
    for path in &inputs {
        let f = features_of(path, &read_records(path)?)?;
        if f.dim() != model.input_dim() {
            return Err(CliError::Data(format!(
                "{}: {} channels, model expects {}",
                path.display(),
                f.dim(),
                model.input_dim()
            )));
        }
        maps.push((file_stem(path), f));
    }
    let mut scored = Vec::with_capacity(maps.len());
    for (stem, f) in &maps {
        let (h, w) = (out_h.unwrap_or(f.height()), out_w.unwrap_or(f.width()));
        let s = score_scene(&model, f, h, w, sigma)?;
        scored.push((stem, s.into_tensor()));
    }
    let mut dir = OutputDir::create(out)?;
    for (stem, t) in scored {
        let bytes = lrood::data::tensorfile::encode(&[Record::f64(SCORES, t)])?;
        dir.write(&format!("{stem}.scores.ulre"), &bytes)?;
    }
    dir.finish("score", &cfg)
}

#[derive(Debug, Serialize)]
struct PerImage {
    scores: String,
    labels: String,
    /// Absent when the image holds only one class.
    metrics: Option<Metrics>,
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    #[serde(flatten)]
    metrics: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_image: Option<Vec<PerImage>>,
}

pub fn eval(cfg: ConfigMap, out: &Path, seed: Option<u64>) -> CliResult<Manifest> {
    no_seed(seed, "eval")?;
    let scores = cfg.paths("scores", true)?;
    let labels = cfg.paths("labels", true)?;
    let per_image: bool = cfg.get_or("per_image", false)?;
    cfg.finish()?;
    if scores.len() != labels.len() {
        return Err(CliError::Config(format!(
            "{} score files but {} label files",
            scores.len(),
            labels.len()
        )));
    }

    let mut all_s = Vec::new();
    let mut all_l = Vec::new();
    let mut per = Vec::new();
    for (sp, lp) in scores.iter().zip(&labels) {
        let s = in_file(sp, find_f64(&read_records(sp)?, SCORES).cloned())?;
        let l = labels_of(lp, &read_records(lp)?)?;
        if s.shape() != [l.height(), l.width()] {
            return Err(CliError::Data(format!(
                "{} is {:?} but {} is {}×{}",
                sp.display(),
                s.shape(),
                lp.display(),
                l.height(),
                l.width()
            )));
        }
        if per_image {
            per.push(PerImage {
                scores: sp.display().to_string(),
                labels: lp.display().to_string(),
                metrics: Metrics::compute(s.data(), l.data()).ok(),
            });
        }
        all_s.extend_from_slice(s.data());
        all_l.extend_from_slice(l.data());
    }
    let metrics = Metrics::compute(&all_s, &all_l)?;
    let mut dir = OutputDir::create(out)?;
    dir.write_json(
        "metrics.json",
        &EvalOutput {
            metrics,
            per_image: per_image.then_some(per),
        },
    )?;
    dir.finish("eval", &cfg)
}

pub fn extrapolate(cfg: ConfigMap, out: &Path, seed: Option<u64>) -> CliResult<Manifest> {
    no_seed(seed, "extrapolate")?;
    let train_inputs = cfg.paths("train_inputs", true)?;
    let inputs = cfg.paths("inputs", true)?;
    let edl = cfg.path("edl_checkpoint")?;
    let bce = cfg.path("bce_checkpoint")?;
    let bin_width: f64 = cfg.get_or("bin_width", DEFAULT_BIN_WIDTH)?;
    let classes: Vec<u8> = cfg.list_or("classes", Vec::new())?;
    cfg.finish()?;
    if edl.is_none() && bce.is_none() {
        return Err(CliError::Config("give edl_checkpoint, bce_checkpoint or both".into()));
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(CliError::Config(format!("bin_width must be positive, got {bin_width}")));
    }

    let mut train_rows: Vec<f64> = Vec::new();
    let mut train_ids: Vec<u8> = Vec::new();
    let mut dim = None;
    for path in &train_inputs {
        let records = read_records(path)?;
        let f = features_of(path, &records)?;
        let ids = in_file(path, find_u8(&records, CLASS_IDS))?;
        if ids.shape() != [f.height(), f.width()] {
            return Err(CliError::Data(format!(
                "{}: class_ids shape {:?} does not match features",
                path.display(),
                ids.shape()
            )));
        }
        if *dim.get_or_insert(f.dim()) != f.dim() {
            return Err(CliError::Data(format!(
                "{}: channel count differs from earlier files",
                path.display()
            )));
        }
        train_rows.extend_from_slice(f.tensor().data());
        train_ids.extend_from_slice(ids.data());
    }
    let dim = dim.expect("at least one training input");
    let train_x = ndarray::Array2::from_shape_vec((train_ids.len(), dim), train_rows).expect("whole pixels");
    let means = class_means(train_x.view(), &train_ids)?;
    means.require(&classes)?;

    let mut eval_rows: Vec<f64> = Vec::new();
    for path in &inputs {
        let f = features_of(path, &read_records(path)?)?;
        if f.dim() != dim {
            return Err(CliError::Data(format!(
                "{}: {} channels, training files have {dim}",
                path.display(),
                f.dim()
            )));
        }
        eval_rows.extend_from_slice(f.tensor().data());
    }
    let eval_x = ndarray::Array2::from_shape_vec((eval_rows.len() / dim, dim), eval_rows).expect("whole pixels");

    let mut results = Vec::new();
    for (path, head) in [(edl, Head::Evidential), (bce, Head::Sigmoid)] {
        let Some(path) = path else { continue };
        let model = load_model(&path)?;
        if model.head() != head {
            return Err(CliError::Data(format!(
                "{} holds a {} head, expected {head}",
                path.display(),
                model.head()
            )));
        }
        let p = model.predict_rows(eval_x.view())?.probability;
        let analysis = extrapolation_analysis(eval_x.view(), &means, &p, bin_width)?;
        results.push((head, analysis));
    }
    let mut dir = OutputDir::create(out)?;
    for (head, a) in results {
        dir.write(&format!("extrapolation_{head}.csv"), a.to_csv().as_bytes())?;
    }
    dir.finish("extrapolate", &cfg)
}

/// Writes a checkpoint outside the manifest flow; used by tests and tooling.
pub fn write_checkpoint(model: &EstimatorModel<f64>, path: &Path) -> CliResult<PathBuf> {
    save_checkpoint(model, path)?;
    Ok(path.to_path_buf())
}

/// Reads the `scores` record of a file written by `score`.
pub fn read_scores(path: &Path) -> CliResult<Tensor<f64>> {
    in_file(path, find_f64(&read_records(path)?, SCORES).cloned())
}
