//! k-nearest-neighbor regression (IBk style).
//!
//! The training set is stored with per-feature min-max normalization;
//! queries are normalized the same way and the prediction is the mean
//! target of the k nearest rows by Euclidean distance in normalized space.
//! Distance ties break toward the lower row index. A feature with zero
//! training range contributes nothing to any distance.

use serde::{Deserialize, Serialize};

use super::{Dataset, RegressError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct KnnRow {
    features: Vec<f64>,
    target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    feature_min: Vec<f64>,
    feature_range: Vec<f64>,
    rows: Vec<KnnRow>,
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn arity(&self) -> usize {
        self.feature_min.len()
    }

    fn normalize(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.feature_min.iter().zip(&self.feature_range))
            .map(|(v, (min, range))| if *range > 0.0 { (v - min) / range } else { 0.0 })
            .collect()
    }

    pub(crate) fn predict_unchecked(&self, features: &[f64]) -> f64 {
        let query = self.normalize(features);
        let mut scored: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let d2: f64 = row
                    .features
                    .iter()
                    .zip(&query)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, i)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut chosen: Vec<usize> = scored[..self.k].iter().map(|(_, i)| *i).collect();
        // Sum in row order so the mean is bit-for-bit reproducible.
        chosen.sort_unstable();
        chosen.iter().map(|&i| self.rows[i].target).sum::<f64>() / self.k as f64
    }
}

pub(super) fn fit(dataset: &Dataset, k: usize) -> Result<KnnModel, RegressError> {
    if dataset.is_empty() {
        return Err(RegressError::EmptyDataset);
    }
    if k == 0 || k > dataset.len() {
        return Err(RegressError::InvalidK {
            k,
            rows: dataset.len(),
        });
    }
    let arity = dataset.arity();
    let mut feature_min = vec![f64::INFINITY; arity];
    let mut feature_max = vec![f64::NEG_INFINITY; arity];
    for i in 0..dataset.len() {
        for (f, v) in dataset.row(i).iter().enumerate() {
            feature_min[f] = feature_min[f].min(*v);
            feature_max[f] = feature_max[f].max(*v);
        }
    }
    if arity == 0 {
        feature_min.clear();
        feature_max.clear();
    }
    let feature_range: Vec<f64> = feature_min
        .iter()
        .zip(&feature_max)
        .map(|(min, max)| max - min)
        .collect();

    let mut model = KnnModel {
        k,
        feature_min,
        feature_range,
        rows: Vec::with_capacity(dataset.len()),
    };
    for i in 0..dataset.len() {
        let normalized = model.normalize(dataset.row(i));
        model.rows.push(KnnRow {
            features: normalized,
            target: dataset.target(i),
        });
    }
    Ok(model)
}
