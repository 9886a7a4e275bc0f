// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use ndarray::ArrayView2;

use crate::data::UNLABELED;
use crate::error::{Error, Result};
use crate::Scalar;

/// Mean feature of one class, raw and unit-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMean<T> {
    pub mean: Vec<T>,
    pub unit: Vec<T>,
    pub count: usize,
}

/// Per-class mean feature vectors keyed by class id.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMeans<T> {
    classes: BTreeMap<u8, ClassMean<T>>,
}

impl<T: Scalar> ClassMeans<T> {
    pub fn get(&self, class: u8) -> Option<&ClassMean<T>> {
        self.classes.get(&class)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, &ClassMean<T>)> {
        self.classes.iter().map(|(&k, v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Errors if any of `classes` had no rows.
    pub fn require(&self, classes: &[u8]) -> Result<()> {
        match classes.iter().find(|k| !self.classes.contains_key(k)) {
            Some(k) => Err(Error::domain(format!("class {k} has no rows"))),
            None => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        self.classes.values().next().map_or(0, |m| m.mean.len())
    }
}

pub(crate) fn unit_vector<T: Scalar>(v: &[T]) -> Option<Vec<T>> {
    let norm = v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    if !(norm.is_finite() && norm > T::zero()) {
        return None;
    }
    Some(v.iter().map(|&x| x / norm).collect())
}

/// Arithmetic mean feature of every class id present in `class_ids`.
///
/// Rows labelled [`UNLABELED`] are skipped. A class whose mean is the zero
/// vector cannot be normalized and is an error.
pub fn class_means<T: Scalar>(features: ArrayView2<'_, T>, class_ids: &[u8]) -> Result<ClassMeans<T>> {
    if features.nrows() != class_ids.len() {
        return Err(Error::shape(format!(
            "{} feature rows but {} class ids",
            features.nrows(),
            class_ids.len()
        )));
    }
    let dim = features.ncols();
    let mut sums: BTreeMap<u8, (Vec<T>, usize)> = BTreeMap::new();
    for (row, &k) in features.rows().into_iter().zip(class_ids) {
        if k == UNLABELED {
            continue;
        }
        let entry = sums.entry(k).or_insert_with(|| (vec![T::zero(); dim], 0));
        for (acc, &x) in entry.0.iter_mut().zip(row.iter()) {
            *acc = *acc + x;
        }
        entry.1 += 1;
    }
    let mut classes = BTreeMap::new();
    for (k, (sum, count)) in sums {
        let n = T::from_usize_lossy(count);
        let mean: Vec<T> = sum.into_iter().map(|s| s / n).collect();
        let unit = unit_vector(&mean).ok_or_else(|| Error::domain(format!("mean of class {k} is the zero vector")))?;
        classes.insert(k, ClassMean { mean, unit, count });
    }
    if classes.is_empty() {
        return Err(Error::domain("no labelled rows"));
    }
    Ok(ClassMeans { classes })
}
