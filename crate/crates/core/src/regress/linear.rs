//! Ordinary least squares linear regression.
//!
//! The normal equations are solved on mean-centered features, which keeps
//! the system small ((arity)² instead of (arity+1)²) and well scaled. The
//! intercept is recovered afterwards as `mean(y) - Σ coef·mean(x)`. When
//! the centered system is singular the slope diagonal is stabilized with
//! ridge term λ = 1e-8; the intercept carries no penalty, so constant
//! targets always fit as (intercept = constant, slopes = 0).

use serde::{Deserialize, Serialize};

use super::{mean, Dataset, RegressError};

/// Ridge stabilizer applied to the slope diagonal when the plain
/// normal-equation solve is singular.
pub const RIDGE_LAMBDA: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    intercept: f64,
    coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn arity(&self) -> usize {
        self.coefficients.len()
    }

    pub(crate) fn predict_unchecked(&self, features: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(features)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }
}

pub(super) fn fit(dataset: &Dataset) -> Result<LinearModel, RegressError> {
    if dataset.is_empty() {
        return Err(RegressError::EmptyDataset);
    }
    let rows: Vec<&[f64]> = (0..dataset.len()).map(|i| dataset.row(i)).collect();
    let columns: Vec<usize> = (0..dataset.arity()).collect();
    let (intercept, slopes) = ols(&rows, dataset.targets(), &columns, true)
        .expect("ridge-stabilized solve cannot fail");
    Ok(LinearModel {
        intercept,
        coefficients: slopes,
    })
}

/// Least squares over the listed feature columns of `rows`. Returns the
/// intercept and one slope per entry of `columns`, in the same order.
///
/// With `ridge_fallback` a singular system is re-solved with the slope
/// diagonal stabilized; without it, `None` is returned so callers can fall
/// back to a plain mean (M5 leaf models do this).
#[allow(clippy::needless_range_loop)]
pub(super) fn ols(
    rows: &[&[f64]],
    targets: &[f64],
    columns: &[usize],
    ridge_fallback: bool,
) -> Option<(f64, Vec<f64>)> {
    let n = rows.len();
    let p = columns.len();
    debug_assert!(n > 0 && n == targets.len());

    let y_mean = mean(targets);
    if p == 0 {
        return Some((y_mean, Vec::new()));
    }

    let mut x_means = vec![0.0; p];
    for (j, &col) in columns.iter().enumerate() {
        x_means[j] = rows.iter().map(|r| r[col]).sum::<f64>() / n as f64;
    }

    // Centered normal equations: a[i][j] = Σ (x_i - x̄_i)(x_j - x̄_j),
    // b[i] = Σ (x_i - x̄_i)(y - ȳ).
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for (row, &y) in rows.iter().zip(targets) {
        let dy = y - y_mean;
        for i in 0..p {
            let dxi = row[columns[i]] - x_means[i];
            b[i] += dxi * dy;
            for j in i..p {
                a[i][j] += dxi * (row[columns[j]] - x_means[j]);
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }

    let slopes = match solve(a.clone(), b.clone()) {
        Some(s) => s,
        None if ridge_fallback => {
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += RIDGE_LAMBDA;
            }
            solve(a, b)?
        }
        None => return None,
    };

    let mut intercept = y_mean;
    for (slope, x_mean) in slopes.iter().zip(&x_means) {
        intercept -= slope * x_mean;
    }
    Some((intercept, slopes))
}

/// Gaussian elimination with partial pivoting. Returns `None` when a pivot
/// is negligibly small relative to the matrix scale.
#[allow(clippy::needless_range_loop)]
pub(super) fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let scale = a
        .iter()
        .flatten()
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tol = scale * 1e-12;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() <= tol {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}
