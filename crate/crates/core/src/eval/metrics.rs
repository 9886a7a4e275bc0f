// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Operating points of a score threshold sweep.
///
/// Entry `i` classifies every sample with score `>= thresholds[i]` as
/// positive. Thresholds are the unique scores in descending order, so
/// `recall` is nondecreasing along the vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PRCurve {
    pub thresholds: Vec<f64>,
    pub true_positives: Vec<usize>,
    pub false_positives: Vec<usize>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub fpr: Vec<f64>,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl PRCurve {
    pub fn new<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::shape(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::domain(format!("labels must be 0 or 1, found {l}")));
        }
        let scores: Vec<f64> = scores.iter().map(|s| s.as_f64()).collect();
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::domain("NaN score"));
        }
        let n_pos = labels.iter().filter(|&&l| l == 1).count();
        let n_neg = labels.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::domain(format!(
                "metrics need both classes, got {n_pos} positives and {n_neg} negatives"
            )));
        }

        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

        let mut curve = PRCurve {
            thresholds: Vec::new(),
            true_positives: Vec::new(),
            false_positives: Vec::new(),
            precision: Vec::new(),
            recall: Vec::new(),
            fpr: Vec::new(),
            n_pos,
            n_neg,
        };
        let (mut tp, mut fp) = (0usize, 0usize);
        let mut i = 0;
        while i < order.len() {
            let tau = scores[order[i]];
            while i < order.len() && scores[order[i]] == tau {
                if labels[order[i]] == 1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
                i += 1;
            }
            curve.thresholds.push(tau);
            curve.true_positives.push(tp);
            curve.false_positives.push(fp);
            curve.precision.push(tp as f64 / (tp + fp) as f64);
            curve.recall.push(tp as f64 / n_pos as f64);
            curve.fpr.push(fp as f64 / n_neg as f64);
        }
        Ok(curve)
    }

    /// Non-interpolated step sum `Σ (R_n − R_{n−1}) P_n`.
    pub fn average_precision(&self) -> f64 {
        let mut prev_recall = 0.0;
        let mut ap = 0.0;
        for (&r, &p) in self.recall.iter().zip(&self.precision) {
            ap += (r - prev_recall) * p;
            prev_recall = r;
        }
        ap
    }

    /// Lowest false positive rate over thresholds whose true positive rate
    /// is at least `percent`/100.
    pub fn fpr_at_tpr_percent(&self, percent: usize) -> f64 {
        // False positives only grow as the threshold drops, so the first
        // admissible operating point has the lowest FPR.
        self.true_positives
            .iter()
            .position(|&tp| tp * 100 >= percent * self.n_pos)
            .map_or(1.0, |i| self.fpr[i])
    }
}

/// Step-wise average precision of `scores` against binary `labels` (1 = positive).
pub fn average_precision<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64> {
    Ok(PRCurve::new(scores, labels)?.average_precision())
}

/// False positive rate at the first threshold reaching 95% true positive rate.
pub fn fpr_at_95_tpr<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64> {
    Ok(PRCurve::new(scores, labels)?.fpr_at_tpr_percent(95))
}

/// Detection metrics over a set of pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ap: f64,
    pub fpr95: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl Metrics {
    pub fn compute<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<Self> {
        let curve = PRCurve::new(scores, labels)?;
        Ok(Metrics {
            ap: curve.average_precision(),
            fpr95: curve.fpr_at_tpr_percent(95),
            n_pos: curve.n_pos,
            n_neg: curve.n_neg,
        })
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Direct-counting reference used by the unit tests.

    /// `(ap, fpr95)` from confusion counts evaluated independently at every
    /// unique threshold.
    pub fn brute_force(scores: &[f64], labels: &[u8]) -> (f64, f64) {
        let mut thresholds = scores.to_vec();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
        let neg = labels.len() as f64 - pos;
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        let mut best_fpr = f64::INFINITY;
        for &tau in &thresholds {
            let mut tp = 0.0;
            let mut fp = 0.0;
            for (&s, &l) in scores.iter().zip(labels) {
                if s >= tau {
                    if l == 1 {
                        tp += 1.0;
                    } else {
                        fp += 1.0;
                    }
                }
            }
            let recall = tp / pos;
            ap += (recall - prev_recall) * tp / (tp + fp);
            prev_recall = recall;
            if recall >= 0.95 - 1e-12 {
                best_fpr = best_fpr.min(fp / neg);
            }
        }
        (ap, best_fpr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::Rng;
    use proptest::prelude::*;

    #[test]
    fn perfect_ranking() {
        let s = [0.9, 0.8, 0.3, 0.1];
        let l = [1, 1, 0, 0];
        assert_eq!(average_precision(&s, &l).unwrap(), 1.0);
        assert_eq!(fpr_at_95_tpr(&s, &l).unwrap(), 0.0);
    }

    #[test]
    fn alternating_four_scores() {
        // Steps: recall 1/2 at precision 1, recall 1 at precision 2/3.
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15, "{ap}");
        assert_eq!(ap, oracle::brute_force(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).0);
    }

    #[test]
    fn identical_scores() {
        let s = [0.4; 10];
        let l = [1, 0, 1, 0, 0, 1, 0, 0, 0, 1];
        assert_eq!(fpr_at_95_tpr(&s, &l).unwrap(), 1.0);
        assert!((average_precision(&s, &l).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn one_high_negative() {
        let mut s = vec![2.0; 20];
        let mut l = vec![1u8; 20];
        s.extend(std::iter::repeat_n(1.0, 19));
        l.extend(std::iter::repeat_n(0, 19));
        s.push(3.0);
        l.push(0);
        assert_eq!(fpr_at_95_tpr(&s, &l).unwrap(), 0.05);
    }

    #[test]
    fn single_class_and_bad_labels_are_errors() {
        assert!(average_precision(&[0.1, 0.2], &[1, 1]).is_err());
        assert!(fpr_at_95_tpr(&[0.1, 0.2], &[0, 0]).is_err());
        assert!(average_precision(&[0.1, 0.2], &[0, 2]).is_err());
        assert!(average_precision(&[0.1], &[0, 1]).is_err());
        assert!(average_precision(&[f64::NAN, 0.2], &[0, 1]).is_err());
    }

    #[test]
    fn null_model_ap_is_prevalence() {
        let mut rng = Rng::new(17);
        let n = 10_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let ap = average_precision(&scores, &labels).unwrap();
        assert!((ap - 0.5).abs() <= 0.02, "{ap}");
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = Rng::new(5);
        for case in 0..10 {
            let levels = if case % 2 == 0 { 1000 } else { 7 };
            let scores: Vec<f64> = (0..1000).map(|_| rng.below(levels) as f64 / levels as f64).collect();
            let labels: Vec<u8> = (0..1000).map(|_| u8::from(rng.uniform() < 0.3)).collect();
            let (ap, fpr) = oracle::brute_force(&scores, &labels);
            let m = Metrics::compute(&scores, &labels).unwrap();
            assert!((m.ap - ap).abs() <= 1e-9, "case {case}: {} vs {ap}", m.ap);
            assert!((m.fpr95 - fpr).abs() <= 1e-9, "case {case}: {} vs {fpr}", m.fpr95);
        }
    }

    #[test]
    fn curve_invariants() {
        let s = [0.5, 0.1, 0.5, 0.9, 0.3, 0.3];
        let l = [1, 0, 0, 1, 1, 0];
        let c = PRCurve::new(&s, &l).unwrap();
        assert_eq!(c.thresholds, vec![0.9, 0.5, 0.3, 0.1]);
        assert_eq!(c.true_positives, vec![1, 2, 3, 3]);
        assert_eq!(c.false_positives, vec![0, 1, 2, 3]);
        assert!(c.recall.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*c.recall.last().unwrap(), 1.0);
        assert_eq!(*c.fpr.last().unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn ap_is_invariant_under_increasing_transforms(
            raw in prop::collection::vec((0.01f64..100.0, 0u8..2), 2..200),
        ) {
            prop_assume!(raw.iter().any(|r| r.1 == 1) && raw.iter().any(|r| r.1 == 0));
            let (s, l): (Vec<f64>, Vec<u8>) = raw.into_iter().unzip();
            let logs: Vec<f64> = s.iter().map(|v| v.ln()).collect();
            let cubed: Vec<f64> = s.iter().map(|v| v * v * v + 1.0).collect();
            let ap = average_precision(&s, &l).unwrap();
            prop_assert_eq!(ap, average_precision(&logs, &l).unwrap());
            prop_assert_eq!(ap, average_precision(&cubed, &l).unwrap());
            prop_assert_eq!(fpr_at_95_tpr(&s, &l).unwrap(), fpr_at_95_tpr(&logs, &l).unwrap());
        }

        #[test]
        fn lowering_a_negative_never_raises_fpr95(
            raw in prop::collection::vec((0.0f64..1.0, 0u8..2), 2..100),
            pick in any::<prop::sample::Index>(),
            drop in 0.0f64..1.0,
        ) {
            prop_assume!(raw.iter().any(|r| r.1 == 1) && raw.iter().any(|r| r.1 == 0));
            let (mut s, l): (Vec<f64>, Vec<u8>) = raw.into_iter().unzip();
            let negatives: Vec<usize> = (0..l.len()).filter(|&i| l[i] == 0).collect();
            let i = negatives[pick.index(negatives.len())];
            let before = fpr_at_95_tpr(&s, &l).unwrap();
            s[i] -= drop;
            prop_assert!(fpr_at_95_tpr(&s, &l).unwrap() <= before);
        }

        #[test]
        fn agrees_with_brute_force(
            raw in prop::collection::vec((0u8..20, 0u8..2), 2..300),
        ) {
            prop_assume!(raw.iter().any(|r| r.1 == 1) && raw.iter().any(|r| r.1 == 0));
            let s: Vec<f64> = raw.iter().map(|r| f64::from(r.0)).collect();
            let l: Vec<u8> = raw.iter().map(|r| r.1).collect();
            let (ap, fpr) = oracle::brute_force(&s, &l);
            prop_assert!((average_precision(&s, &l).unwrap() - ap).abs() <= 1e-9);
            prop_assert!((fpr_at_95_tpr(&s, &l).unwrap() - fpr).abs() <= 1e-9);
        }
    }
}
