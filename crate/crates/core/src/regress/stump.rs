//! One-split regression stump.
//!
//! The fit enumerates, for every feature, the midpoints between consecutive
//! distinct sorted values and keeps the (feature, threshold) pair whose
//! two-leaf split minimizes total squared error. Ties resolve to the lowest
//! feature index, then the lowest threshold. If no split strictly beats the
//! single-leaf baseline the stump collapses to one leaf predicting the mean.

use serde::{Deserialize, Serialize};

use super::{mean, Dataset, RegressError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StumpSplit {
    pub feature: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpModel {
    split: Option<StumpSplit>,
    left_value: f64,
    right_value: f64,
    arity: usize,
}

impl StumpModel {
    pub fn split(&self) -> Option<StumpSplit> {
        self.split
    }

    pub fn left_value(&self) -> f64 {
        self.left_value
    }

    pub fn right_value(&self) -> f64 {
        self.right_value
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Total squared error of this stump on a dataset.
    pub fn training_sse(&self, dataset: &Dataset) -> f64 {
        (0..dataset.len())
            .map(|i| {
                let err = self.predict_unchecked(dataset.row(i)) - dataset.target(i);
                err * err
            })
            .sum()
    }

    pub(crate) fn predict_unchecked(&self, features: &[f64]) -> f64 {
        match self.split {
            Some(s) if features[s.feature] < s.threshold => self.left_value,
            Some(_) => self.right_value,
            None => self.left_value,
        }
    }
}

struct BestSplit {
    sse: f64,
    feature: usize,
    threshold: f64,
    left_mean: f64,
    right_mean: f64,
}

pub(super) fn fit(dataset: &Dataset) -> Result<StumpModel, RegressError> {
    if dataset.is_empty() {
        return Err(RegressError::EmptyDataset);
    }
    let n = dataset.len();
    let targets = dataset.targets();
    let global_mean = mean(targets);
    let baseline_sse: f64 = targets.iter().map(|y| (y - global_mean).powi(2)).sum();

    let mut best: Option<BestSplit> = None;
    for feature in 0..dataset.arity() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| dataset.row(a)[feature].total_cmp(&dataset.row(b)[feature]));

        // Prefix sums over the sorted order let each candidate split be
        // scored in O(1): SSE = Σy² - (Σy)²/n per side.
        let mut prefix_y = vec![0.0; n + 1];
        let mut prefix_y2 = vec![0.0; n + 1];
        for (pos, &idx) in order.iter().enumerate() {
            let y = targets[idx];
            prefix_y[pos + 1] = prefix_y[pos] + y;
            prefix_y2[pos + 1] = prefix_y2[pos] + y * y;
        }
        let total_y = prefix_y[n];
        let total_y2 = prefix_y2[n];

        for boundary in 1..n {
            let prev = dataset.row(order[boundary - 1])[feature];
            let next = dataset.row(order[boundary])[feature];
            if prev == next {
                continue;
            }
            let threshold = (prev + next) / 2.0;
            let left_n = boundary as f64;
            let right_n = (n - boundary) as f64;
            let left_y = prefix_y[boundary];
            let right_y = total_y - left_y;
            let left_sse = (prefix_y2[boundary] - left_y * left_y / left_n).max(0.0);
            let right_sse = (total_y2 - prefix_y2[boundary] - right_y * right_y / right_n).max(0.0);
            let sse = left_sse + right_sse;
            if best.as_ref().is_none_or(|b| sse < b.sse) {
                best = Some(BestSplit {
                    sse,
                    feature,
                    threshold,
                    left_mean: left_y / left_n,
                    right_mean: right_y / right_n,
                });
            }
        }
    }

    Ok(match best {
        Some(b) if b.sse < baseline_sse => StumpModel {
            split: Some(StumpSplit {
                feature: b.feature,
                threshold: b.threshold,
            }),
            left_value: b.left_mean,
            right_value: b.right_mean,
            arity: dataset.arity(),
        },
        _ => StumpModel {
            split: None,
            left_value: global_mean,
            right_value: global_mean,
            arity: dataset.arity(),
        },
    })
}
