//! Numeric prediction algorithms behind one predictor contract.
//!
//! Five model families are implemented from scratch: ordinary least squares
//! linear regression, one-split decision stumps, greedy decision tables,
//! k-nearest-neighbor regression, and M5 model trees. All fits are
//! deterministic: ties in split quality, lookup error, and neighbor
//! distance resolve to the lowest feature index, lowest threshold, or
//! lowest row index, so refitting identical data always yields identical
//! predictions.

mod knn;
mod linear;
mod m5p;
mod persist;
mod stump;
mod table;

pub use knn::KnnModel;
pub use linear::LinearModel;
pub use m5p::M5pModel;
pub use persist::{load_model, model_file_name, save_model, MODEL_FILE_VERSION};
pub use stump::{StumpModel, StumpSplit};
pub use table::TableModel;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Algorithm family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    LinearRegression,
    DecisionStump,
    DecisionTable,
    Knn,
    M5p,
}

impl Algorithm {
    /// All algorithms, in benchmark report row order.
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Knn,
        Algorithm::M5p,
        Algorithm::DecisionStump,
        Algorithm::DecisionTable,
        Algorithm::LinearRegression,
    ];

    /// Display label used in benchmark reports.
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Knn => "IBk",
            Algorithm::M5p => "M5P",
            Algorithm::DecisionStump => "DecisionStump",
            Algorithm::DecisionTable => "DecisionTable",
            Algorithm::LinearRegression => "LinearRegression",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "linreg" | "linearregression" => Ok(Algorithm::LinearRegression),
            "stump" | "decisionstump" => Ok(Algorithm::DecisionStump),
            "table" | "decisiontable" => Ok(Algorithm::DecisionTable),
            "knn" | "ibk" => Ok(Algorithm::Knn),
            "m5p" | "m5" => Ok(Algorithm::M5p),
            other => Err(format!(
                "unknown algorithm {other:?} (expected one of: linear, stump, table, knn, m5p)"
            )),
        }
    }
}

/// A training set: rows of equal-arity feature vectors with one real target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>) -> Self {
        Self {
            feature_names,
            features: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn from_rows(
        feature_names: Vec<String>,
        rows: impl IntoIterator<Item = (Vec<f64>, f64)>,
    ) -> Result<Self, RegressError> {
        let mut ds = Self::new(feature_names);
        for (features, target) in rows {
            ds.push_row(features, target)?;
        }
        Ok(ds)
    }

    pub fn push_row(&mut self, features: Vec<f64>, target: f64) -> Result<(), RegressError> {
        if features.len() != self.feature_names.len() {
            return Err(RegressError::ArityMismatch {
                expected: self.feature_names.len(),
                got: features.len(),
            });
        }
        self.features.push(features);
        self.targets.push(target);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

/// Per-algorithm fitting knobs. Every field has the library default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    /// Neighbors for k-NN.
    pub knn_k: usize,
    /// Equal-width bins per feature for the decision table.
    pub table_bins: usize,
    /// Minimum rows per leaf for M5 trees.
    pub m5p_min_leaf: usize,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            knn_k: 1,
            table_bins: 10,
            m5p_min_leaf: 4,
        }
    }
}

/// Timing and size record for one fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub algorithm: Algorithm,
    pub fit_duration: Duration,
    pub training_rows: usize,
}

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("feature arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("k must be between 1 and {rows}, got {k}")]
    InvalidK { k: usize, rows: usize },
    #[error("failed to {action} model file {path}: {source}")]
    ModelIo {
        action: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed model file {path}: {msg}")]
    ModelFormat { path: PathBuf, msg: String },
}

/// A fitted model. Immutable once built; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Predictor {
    LinearRegression(LinearModel),
    DecisionStump(StumpModel),
    DecisionTable(TableModel),
    Knn(KnnModel),
    M5p(M5pModel),
}

impl Predictor {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Predictor::LinearRegression(_) => Algorithm::LinearRegression,
            Predictor::DecisionStump(_) => Algorithm::DecisionStump,
            Predictor::DecisionTable(_) => Algorithm::DecisionTable,
            Predictor::Knn(_) => Algorithm::Knn,
            Predictor::M5p(_) => Algorithm::M5p,
        }
    }

    /// Feature arity the model was fitted with.
    pub fn arity(&self) -> usize {
        match self {
            Predictor::LinearRegression(m) => m.arity(),
            Predictor::DecisionStump(m) => m.arity(),
            Predictor::DecisionTable(m) => m.arity(),
            Predictor::Knn(m) => m.arity(),
            Predictor::M5p(m) => m.arity(),
        }
    }

    /// Predict the target for one feature vector.
    pub fn predict(&self, features: &[f64]) -> Result<f64, RegressError> {
        if features.len() != self.arity() {
            return Err(RegressError::ArityMismatch {
                expected: self.arity(),
                got: features.len(),
            });
        }
        Ok(match self {
            Predictor::LinearRegression(m) => m.predict_unchecked(features),
            Predictor::DecisionStump(m) => m.predict_unchecked(features),
            Predictor::DecisionTable(m) => m.predict_unchecked(features),
            Predictor::Knn(m) => m.predict_unchecked(features),
            Predictor::M5p(m) => m.predict_unchecked(features),
        })
    }
}

/// Fit the named algorithm on a dataset.
pub fn fit(
    algorithm: Algorithm,
    dataset: &Dataset,
    params: &FitParams,
) -> Result<Predictor, RegressError> {
    match algorithm {
        Algorithm::LinearRegression => fit_linear_regression(dataset),
        Algorithm::DecisionStump => fit_decision_stump(dataset),
        Algorithm::DecisionTable => fit_decision_table(dataset, params.table_bins),
        Algorithm::Knn => fit_knn(dataset, params.knn_k),
        Algorithm::M5p => fit_m5p(dataset, params.m5p_min_leaf),
    }
}

/// Fit with wall-clock timing for benchmark reports.
pub fn fit_timed(
    algorithm: Algorithm,
    dataset: &Dataset,
    params: &FitParams,
) -> Result<(Predictor, FitReport), RegressError> {
    let start = Instant::now();
    let predictor = fit(algorithm, dataset, params)?;
    Ok((
        predictor,
        FitReport {
            algorithm,
            fit_duration: start.elapsed(),
            training_rows: dataset.len(),
        },
    ))
}

/// Ordinary least squares over all features plus an intercept.
pub fn fit_linear_regression(dataset: &Dataset) -> Result<Predictor, RegressError> {
    linear::fit(dataset).map(Predictor::LinearRegression)
}

/// One (feature, threshold) split minimizing total squared error.
pub fn fit_decision_stump(dataset: &Dataset) -> Result<Predictor, RegressError> {
    stump::fit(dataset).map(Predictor::DecisionStump)
}

/// Lookup table over a greedily selected, discretized feature subset.
pub fn fit_decision_table(dataset: &Dataset, bins: usize) -> Result<Predictor, RegressError> {
    table::fit(dataset, bins).map(Predictor::DecisionTable)
}

/// k-nearest-neighbor regression with min-max feature normalization.
pub fn fit_knn(dataset: &Dataset, k: usize) -> Result<Predictor, RegressError> {
    knn::fit(dataset, k).map(Predictor::Knn)
}

/// M5 model tree: SDR splits, linear leaf models, complexity-based pruning.
pub fn fit_m5p(dataset: &Dataset, min_leaf: usize) -> Result<Predictor, RegressError> {
    m5p::fit(dataset, min_leaf).map(Predictor::M5p)
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    fn rows(data: &[(&[f64], f64)]) -> Dataset {
        Dataset::from_rows(
            names(data[0].0.len()),
            data.iter().map(|(f, t)| (f.to_vec(), *t)),
        )
        .unwrap()
    }

    #[test]
    fn dataset_rejects_mismatched_row() {
        let mut ds = Dataset::new(names(2));
        assert!(ds.push_row(vec![1.0], 2.0).is_err());
    }

    #[test]
    fn every_fit_rejects_empty_dataset() {
        let ds = Dataset::new(names(2));
        for alg in Algorithm::ALL {
            assert!(
                matches!(
                    fit(alg, &ds, &FitParams::default()),
                    Err(RegressError::EmptyDataset)
                ),
                "{alg} accepted an empty dataset"
            );
        }
    }

    #[test]
    fn predict_rejects_wrong_arity() {
        let ds = rows(&[(&[0.0, 1.0], 1.0), (&[1.0, 0.0], 2.0)]);
        for alg in Algorithm::ALL {
            let p = fit(alg, &ds, &FitParams::default()).unwrap();
            assert!(matches!(
                p.predict(&[1.0]),
                Err(RegressError::ArityMismatch { expected: 2, got: 1 })
            ));
        }
    }

    #[test]
    fn fits_on_constant_integer_targets_predict_the_constant_exactly() {
        let data: Vec<(Vec<f64>, f64)> = (0..24)
            .map(|i| {
                let x = i as f64 * 0.37;
                (vec![x.sin() * 3.0, (x * 1.7).cos(), x], 7.0)
            })
            .collect();
        let ds = Dataset::from_rows(names(3), data).unwrap();
        for alg in Algorithm::ALL {
            let p = fit(alg, &ds, &FitParams::default()).unwrap();
            for q in 0..50 {
                let x = q as f64 * 0.91 - 12.0;
                let features = [x, x * 0.5, x * x * 0.01];
                assert_eq!(
                    p.predict(&features).unwrap(),
                    7.0,
                    "{alg} drifted from the constant"
                );
            }
        }
    }

    #[test]
    fn repeated_predictions_are_identical() {
        let ds = rows(&[
            (&[0.0, 2.0], 1.5),
            (&[1.0, 1.0], 3.0),
            (&[2.0, 0.5], 5.5),
            (&[3.0, 0.0], 6.5),
        ]);
        for alg in Algorithm::ALL {
            let p = fit(alg, &ds, &FitParams::default()).unwrap();
            let a = p.predict(&[1.3, 0.7]).unwrap();
            let b = p.predict(&[1.3, 0.7]).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn refitting_identical_data_gives_identical_predictions() {
        let ds = rows(&[
            (&[0.0, 2.0], 1.5),
            (&[1.0, 1.0], 3.0),
            (&[2.0, 0.5], 5.5),
            (&[3.0, 0.0], 6.5),
            (&[4.0, 2.5], 2.0),
        ]);
        for alg in Algorithm::ALL {
            let p1 = fit(alg, &ds, &FitParams::default()).unwrap();
            let p2 = fit(alg, &ds, &FitParams::default()).unwrap();
            for q in 0..20 {
                let features = [q as f64 * 0.3, 2.5 - q as f64 * 0.2];
                assert_eq!(
                    p1.predict(&features).unwrap().to_bits(),
                    p2.predict(&features).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn shuffling_rows_does_not_change_deterministic_fits() {
        let base: Vec<(Vec<f64>, f64)> = (0..30)
            .map(|i| {
                let x = i as f64 * 0.7;
                (vec![x, (x * 0.31).sin()], x * 2.0 + (x * 0.13).cos())
            })
            .collect();
        let mut shuffled = base.clone();
        // Fixed permutation, no RNG needed.
        shuffled.reverse();
        shuffled.swap(3, 11);
        shuffled.swap(0, 25);

        let d1 = Dataset::from_rows(names(2), base).unwrap();
        let d2 = Dataset::from_rows(names(2), shuffled).unwrap();

        for alg in [
            Algorithm::LinearRegression,
            Algorithm::DecisionStump,
            Algorithm::M5p,
        ] {
            let p1 = fit(alg, &d1, &FitParams::default()).unwrap();
            let p2 = fit(alg, &d2, &FitParams::default()).unwrap();
            for q in 0..20 {
                let features = [q as f64, (q as f64 * 0.5).sin()];
                let a = p1.predict(&features).unwrap();
                let b = p2.predict(&features).unwrap();
                assert!((a - b).abs() < 1e-9, "{alg}: {a} vs {b}");
            }
        }
    }
}
