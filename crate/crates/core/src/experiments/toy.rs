// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{analytic_gaussian_lr, gen_gaussian_1d};
use crate::error::{Error, Result};
use crate::model::{init_model, train, AdamConfig, EarlyStopping, EstimatorModel, Head, TrainConfig, TrainReport};
use crate::numkernel::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub n_per_class: usize,
    pub mu0: f64,
    pub mu1: f64,
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub val_fraction: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_step: f64,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            n_per_class: 100_000,
            mu0: -0.4,
            mu1: 0.4,
            hidden: 16,
            epochs: 100,
            batch_size: 1024,
            learning_rate: 1e-3,
            patience: 5,
            val_fraction: 0.1,
            grid_min: -6.0,
            grid_max: 6.0,
            grid_step: 0.05,
            seed: 0,
        }
    }
}

impl ToyConfig {
    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            batch_size: self.batch_size,
            seed,
            early_stopping: Some(EarlyStopping {
                patience: self.patience,
                val_fraction: self.val_fraction,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::domain("hidden width must be at least 1"));
        }
        if !(self.grid_step > 0.0 && self.grid_max > self.grid_min) {
            return Err(Error::domain("grid needs grid_max > grid_min and a positive step"));
        }
        self.train_config(self.seed).validate()
    }
}

/// Evenly spaced points from `lo` to `hi` inclusive, `step` apart.
///
/// Points are computed as `lo + (hi − lo)·i/(n − 1)` so the endpoints and
/// the midpoint are exact.
pub fn toy_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let intervals = ((hi - lo) / step).round() as usize;
    (0..=intervals)
        .map(|i| lo + (hi - lo) * i as f64 / intervals as f64)
        .collect()
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyRow {
    pub x: f64,
    pub p_edl: f64,
    pub vacuity: f64,
    pub p_bce: f64,
    pub entropy_bce: f64,
    pub lr_edl: f64,
    pub lr_true: f64,
}

impl ToyRow {
    pub const CSV_HEADER: &'static str = "x,p_edl,vacuity,p_bce,entropy_bce,lr_edl,lr_true";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySummary {
    pub seed: u64,
    pub p_edl_at_0: f64,
    pub vacuity_at_0: f64,
    pub vacuity_at_minus_6: f64,
    pub vacuity_at_plus_6: f64,
    /// Smaller of the two edge vacuities divided by the vacuity at 0.
    pub vacuity_ratio: f64,
    /// Least-squares slope of `ln lr_edl` on grid points in `[−2, 2]`.
    pub log_lr_slope: f64,
    pub p_bce_at_6: f64,
    pub p_edl_at_6: f64,
    pub edl_epochs: usize,
    pub bce_epochs: usize,
}

#[derive(Debug, Clone)]
pub struct ToyOutcome {
    pub rows: Vec<ToyRow>,
    pub summary: ToySummary,
    pub edl_model: EstimatorModel<f64>,
    pub bce_model: EstimatorModel<f64>,
    pub edl_report: TrainReport,
    pub bce_report: TrainReport,
}

impl ToyOutcome {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", ToyRow::CSV_HEADER);
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.x, r.p_edl, r.vacuity, r.p_bce, r.entropy_bce, r.lr_edl, r.lr_true
            )
            .expect("writing to a String");
        }
        out
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Trains both heads on the two-Gaussian problem and evaluates them on the grid.
pub fn run_toy_gaussian(config: &ToyConfig) -> Result<ToyOutcome> {
    config.validate()?;
    let (x, y) = gen_gaussian_1d(config.n_per_class, config.mu0, config.mu1, config.seed)?;
    let x = x.view2()?;
    let mut seeds = Rng::with_stream(config.seed, 7);
    let dims_edl = [1, config.hidden, Head::Evidential.output_width()];
    let dims_bce = [1, config.hidden, Head::Sigmoid.output_width()];
    let edl0 = init_model(&dims_edl, seeds.next_u64(), Head::Evidential)?;
    let bce0 = init_model(&dims_bce, seeds.next_u64(), Head::Sigmoid)?;
    let (edl_model, edl_report) = train(edl0, x, &y, &config.train_config(seeds.next_u64()))?;
    let (bce_model, bce_report) = train(bce0, x, &y, &config.train_config(seeds.next_u64()))?;

    let grid = toy_grid(config.grid_min, config.grid_max, config.grid_step);
    let gx = Array2::from_shape_vec((grid.len(), 1), grid.clone()).expect("column vector");
    let edl = edl_model.predict_rows(gx.view())?;
    let bce = bce_model.predict_rows(gx.view())?;
    let vac = edl.vacuity.as_ref().expect("evidential head reports vacuity");
    let rows: Vec<ToyRow> = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| ToyRow {
            x,
            p_edl: edl.probability[i],
            vacuity: vac[i],
            p_bce: bce.probability[i],
            entropy_bce: binary_entropy(bce.probability[i]),
            lr_edl: edl.lr[i],
            lr_true: analytic_gaussian_lr(x, config.mu0, config.mu1),
        })
        .collect();

    let probe = Array2::from_shape_vec((3, 1), vec![0.0, -6.0, 6.0]).expect("column vector");
    let pe = edl_model.predict_rows(probe.view())?;
    let pb = bce_model.predict_rows(probe.view())?;
    let pv = pe.vacuity.as_ref().expect("evidential head reports vacuity");
    let (cx, cy): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.x.abs() <= 2.0 + 1e-9)
        .map(|r| (r.x, r.lr_edl.ln()))
        .unzip();
    let summary = ToySummary {
        seed: config.seed,
        p_edl_at_0: pe.probability[0],
        vacuity_at_0: pv[0],
        vacuity_at_minus_6: pv[1],
        vacuity_at_plus_6: pv[2],
        vacuity_ratio: pv[1].min(pv[2]) / pv[0],
        log_lr_slope: slope(&cx, &cy),
        p_bce_at_6: pb.probability[2],
        p_edl_at_6: pe.probability[2],
        edl_epochs: edl_report.epochs_run,
        bce_epochs: bce_report.epochs_run,
    };
    Ok(ToyOutcome {
        rows,
        summary,
        edl_model,
        bce_model,
        edl_report,
        bce_report,
    })
}
