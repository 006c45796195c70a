//! Benchmark harness: per-algorithm fit time, per-instance prediction time,
//! energy estimate, error rate, and an absolute-error histogram.
//!
//! The dataset splits chronologically — the first portion trains, the rest
//! tests — because the production system always trains on the past and
//! predicts the present. The error rate is the mean absolute deviation
//! percent over the test split; the histogram buckets deviations at 10%
//! width (lower-inclusive) with a final bucket for everything at or above
//! 100%.
//!
//! Energy per instance combines a CPU term with a fixed radio term:
//! `cpu_power * predict_time + radio_power * message_bits / radio_rate`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::detect::{deviation_percent, DEFAULT_EPSILON};
use crate::regress::{fit_timed, Algorithm, Dataset, FitParams, RegressError};

/// Histogram layout: ten 10%-wide buckets plus an overflow bucket.
pub const HISTOGRAM_BUCKETS: usize = 11;

/// Power and radio parameters for the energy estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub cpu_power_watts: f64,
    pub radio_power_watts: f64,
    pub radio_rate_bps: f64,
    pub message_bits: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            cpu_power_watts: 0.5,
            radio_power_watts: 1.221,
            radio_rate_bps: 1_000_000.0,
            message_bits: 224.0,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<(), BenchError> {
        let fields = [
            self.cpu_power_watts,
            self.radio_power_watts,
            self.radio_rate_bps,
            self.message_bits,
        ];
        if fields.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(BenchError::InvalidConfig(
                "energy model parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Joules per evaluated instance.
pub fn energy_per_instance(predict_time_s: f64, em: &EnergyModel) -> f64 {
    em.cpu_power_watts * predict_time_s + em.radio_power_watts * em.message_bits / em.radio_rate_bps
}

/// Count deviations into 10%-wide lower-inclusive buckets; the last bucket
/// collects everything at or above 100%.
pub fn error_histogram(deviations: &[f64]) -> [u64; HISTOGRAM_BUCKETS] {
    let mut buckets = [0u64; HISTOGRAM_BUCKETS];
    for &d in deviations {
        let idx = if d < 0.0 {
            0
        } else {
            ((d / 10.0).floor() as usize).min(HISTOGRAM_BUCKETS - 1)
        };
        buckets[idx] += 1;
    }
    buckets
}

/// Label of one histogram bucket.
pub fn bucket_label(index: usize) -> String {
    if index + 1 < HISTOGRAM_BUCKETS {
        format!("{}-{}", index * 10, (index + 1) * 10)
    } else {
        ">100".to_string()
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),
    #[error("dataset too small: {rows} rows cannot give non-empty train and test splits")]
    DatasetTooSmall { rows: usize },
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One algorithm's benchmark figures.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoBench {
    pub algorithm: Algorithm,
    pub fit_time_s: f64,
    /// Mean wall-clock seconds per single-instance prediction.
    pub predict_time_s: f64,
    /// Energy estimate per instance in joules.
    pub energy_j: f64,
    /// Mean absolute deviation percent over the test split.
    pub error_rate_pct: f64,
    pub histogram: [u64; HISTOGRAM_BUCKETS],
}

/// Results for every benchmarked algorithm over one dataset split.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub results: Vec<AlgoBench>,
    pub train_rows: usize,
    pub test_rows: usize,
}

/// Fit and evaluate each algorithm on a chronological train/test split.
/// `holdout` is the trailing fraction reserved for testing.
pub fn run_bench(
    dataset: &Dataset,
    algorithms: &[Algorithm],
    holdout: f64,
    em: &EnergyModel,
    params: &FitParams,
) -> Result<BenchReport, BenchError> {
    em.validate()?;
    if !(holdout > 0.0 && holdout < 1.0) {
        return Err(BenchError::InvalidConfig(format!(
            "holdout fraction must be in (0, 1), got {holdout}"
        )));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(BenchError::DatasetTooSmall { rows: n });
    }
    let test_rows = ((n as f64 * holdout).round() as usize).clamp(1, n - 1);
    let train_rows = n - test_rows;

    let mut train = Dataset::new(dataset.feature_names().to_vec());
    let mut test = Dataset::new(dataset.feature_names().to_vec());
    for i in 0..n {
        let split = if i < train_rows { &mut train } else { &mut test };
        split.push_row(dataset.row(i).to_vec(), dataset.target(i))?;
    }

    let mut results = Vec::with_capacity(algorithms.len());
    for &algorithm in algorithms {
        let (predictor, fit_report) = fit_timed(algorithm, &train, params)?;

        let mut deviations = Vec::with_capacity(test.len());
        let predict_start = Instant::now();
        for i in 0..test.len() {
            let predicted = predictor.predict(test.row(i))?;
            deviations.push(deviation_percent(predicted, test.target(i), DEFAULT_EPSILON));
        }
        let predict_time_s = predict_start.elapsed().as_secs_f64() / test.len() as f64;

        let error_rate_pct = deviations.iter().sum::<f64>() / deviations.len() as f64;
        results.push(AlgoBench {
            algorithm,
            fit_time_s: fit_report.fit_duration.as_secs_f64(),
            predict_time_s,
            energy_j: energy_per_instance(predict_time_s, em),
            error_rate_pct,
            histogram: error_histogram(&deviations),
        });
    }

    Ok(BenchReport {
        results,
        train_rows,
        test_rows,
    })
}

/// Report CSV: one row per algorithm. The three reported quantities keep
/// their conventional column order (prediction time, energy, error rate);
/// fit time is appended.
pub fn report_csv(report: &BenchReport) -> String {
    let mut out = String::from("algorithm,predict_time_s,energy_j,error_rate_pct,fit_time_s\n");
    for row in &report.results {
        out.push_str(&format!(
            "{},{:.9},{:.9},{:.6},{:.9}\n",
            row.algorithm, row.predict_time_s, row.energy_j, row.error_rate_pct, row.fit_time_s
        ));
    }
    out
}

/// Histogram CSV: one row per bucket, one count column per algorithm.
pub fn histogram_csv(report: &BenchReport) -> String {
    let mut out = String::from("bucket");
    for row in &report.results {
        out.push(',');
        out.push_str(row.algorithm.label());
    }
    out.push('\n');
    for bucket in 0..HISTOGRAM_BUCKETS {
        out.push_str(&bucket_label(bucket));
        for row in &report.results {
            out.push_str(&format!(",{}", row.histogram[bucket]));
        }
        out.push('\n');
    }
    out
}

pub fn write_report_files(report: &BenchReport, out_dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(out_dir).map_err(|source| BenchError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let report_path = out_dir.join("bench_report.csv");
    fs::write(&report_path, report_csv(report)).map_err(|source| BenchError::Io {
        path: report_path,
        source,
    })?;
    let histogram_path = out_dir.join("bench_histogram.csv");
    fs::write(&histogram_path, histogram_csv(report)).map_err(|source| BenchError::Io {
        path: histogram_path,
        source,
    })?;
    Ok(())
}
