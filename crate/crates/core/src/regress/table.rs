//! Decision table regression.
//!
//! A lookup table keyed on discretized features (equal-width bins over the
//! training range). The feature subset is chosen by greedy forward
//! selection minimizing leave-one-out mean squared error; additions that do
//! not strictly improve the error stop the search, so the empty subset —
//! predicting the global mean everywhere — is a legal outcome. Queries
//! falling into a cell with no training rows also fall back to the global
//! mean.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{mean, Dataset, RegressError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRange {
    pub min: f64,
    pub max: f64,
}

impl BinRange {
    fn bin(&self, value: f64, bins: usize) -> u16 {
        if self.max <= self.min {
            return 0;
        }
        let fraction = (value - self.min) / (self.max - self.min);
        let idx = (fraction * bins as f64).floor();
        idx.clamp(0.0, (bins - 1) as f64) as u16
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TableCell {
    key: Vec<u16>,
    mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableModel {
    /// Selected feature indices, ascending.
    selected: Vec<usize>,
    bins: usize,
    /// Training range per selected feature, aligned with `selected`.
    ranges: Vec<BinRange>,
    /// Cells sorted by key for binary-search lookup.
    cells: Vec<TableCell>,
    global_mean: f64,
    arity: usize,
}

impl TableModel {
    pub fn selected_features(&self) -> &[usize] {
        &self.selected
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub(crate) fn predict_unchecked(&self, features: &[f64]) -> f64 {
        if self.selected.is_empty() {
            return self.global_mean;
        }
        let key: Vec<u16> = self
            .selected
            .iter()
            .zip(&self.ranges)
            .map(|(&f, range)| range.bin(features[f], self.bins))
            .collect();
        match self.cells.binary_search_by(|cell| cell.key.cmp(&key)) {
            Ok(i) => self.cells[i].mean,
            Err(_) => self.global_mean,
        }
    }
}

fn feature_range(dataset: &Dataset, feature: usize) -> BinRange {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..dataset.len() {
        let v = dataset.row(i)[feature];
        min = min.min(v);
        max = max.max(v);
    }
    BinRange { min, max }
}

fn keys_for_subset(
    dataset: &Dataset,
    subset: &[usize],
    ranges: &HashMap<usize, BinRange>,
    bins: usize,
) -> Vec<Vec<u16>> {
    (0..dataset.len())
        .map(|i| {
            subset
                .iter()
                .map(|f| ranges[f].bin(dataset.row(i)[*f], bins))
                .collect()
        })
        .collect()
}

/// Leave-one-out MSE of a table over `subset`. Binning uses the full
/// training range; only the held-out row's contribution to cell statistics
/// is removed. A cell left empty by the removal predicts the global mean
/// of the remaining rows.
fn loo_mse(
    dataset: &Dataset,
    subset: &[usize],
    ranges: &HashMap<usize, BinRange>,
    bins: usize,
) -> f64 {
    let n = dataset.len();
    debug_assert!(n >= 2);
    let keys = keys_for_subset(dataset, subset, ranges, bins);
    let mut cells: HashMap<&[u16], (f64, usize)> = HashMap::new();
    for (i, key) in keys.iter().enumerate() {
        let entry = cells.entry(key.as_slice()).or_insert((0.0, 0));
        entry.0 += dataset.target(i);
        entry.1 += 1;
    }
    let total: f64 = dataset.targets().iter().sum();

    let mut err = 0.0;
    for (i, key) in keys.iter().enumerate() {
        let y = dataset.target(i);
        let (cell_sum, cell_count) = cells[key.as_slice()];
        let predicted = if cell_count > 1 {
            (cell_sum - y) / (cell_count - 1) as f64
        } else {
            (total - y) / (n - 1) as f64
        };
        err += (predicted - y) * (predicted - y);
    }
    err / n as f64
}

pub(super) fn fit(dataset: &Dataset, bins: usize) -> Result<TableModel, RegressError> {
    if dataset.is_empty() {
        return Err(RegressError::EmptyDataset);
    }
    let bins = bins.clamp(1, u16::MAX as usize + 1);
    let n = dataset.len();
    let global_mean = mean(dataset.targets());
    let ranges: HashMap<usize, BinRange> = (0..dataset.arity())
        .map(|f| (f, feature_range(dataset, f)))
        .collect();

    let mut selected: Vec<usize> = Vec::new();
    // A single row gives leave-one-out nothing to stand on; keep the
    // global-mean table.
    if n >= 2 {
        let mut current_err = loo_mse(dataset, &selected, &ranges, bins);
        loop {
            let mut best: Option<(f64, usize)> = None;
            for feature in 0..dataset.arity() {
                if selected.contains(&feature) {
                    continue;
                }
                let mut candidate = selected.clone();
                candidate.push(feature);
                candidate.sort_unstable();
                let err = loo_mse(dataset, &candidate, &ranges, bins);
                if best.is_none_or(|(b, _)| err < b) {
                    best = Some((err, feature));
                }
            }
            match best {
                Some((err, feature)) if err < current_err => {
                    selected.push(feature);
                    selected.sort_unstable();
                    current_err = err;
                }
                _ => break,
            }
        }
    }

    let model_ranges: Vec<BinRange> = selected.iter().map(|f| ranges[f]).collect();
    let keys = keys_for_subset(dataset, &selected, &ranges, bins);
    let mut sums: HashMap<Vec<u16>, (f64, usize)> = HashMap::new();
    for (i, key) in keys.into_iter().enumerate() {
        let entry = sums.entry(key).or_insert((0.0, 0));
        entry.0 += dataset.target(i);
        entry.1 += 1;
    }
    let mut cells: Vec<TableCell> = sums
        .into_iter()
        .map(|(key, (sum, count))| TableCell {
            key,
            mean: sum / count as f64,
        })
        .collect();
    cells.sort_by(|a, b| a.key.cmp(&b.key));

    Ok(TableModel {
        selected,
        bins,
        ranges: model_ranges,
        cells,
        global_mean,
        arity: dataset.arity(),
    })
}
