//! Discretized 2D Gaussian observation model over a grid of hand-position cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianObsModel {
    pub columns: usize,
    pub rows: usize,
    /// Per-type mean `(x, y)` in cell units; cell `(c, r)` has its centre at `(c + 0.5, r + 0.5)`.
    pub means: Vec<[f64; 2]>,
    /// Per-type covariance `[[σxx, σxy], [σxy, σyy]]`.
    pub covariances: Vec<[[f64; 2]; 2]>,
}

impl GaussianObsModel {
    /// Two types with isotropic covariance and means mirrored about the grid's vertical centre line.
    pub fn mirrored(columns: usize, rows: usize, left_x: f64, y: f64, sigma: f64) -> Self {
        let cov = [[sigma * sigma, 0.0], [0.0, sigma * sigma]];
        Self {
            columns,
            rows,
            means: vec![[left_x, y], [columns as f64 - left_x, y]],
            covariances: vec![cov, cov],
        }
    }

    pub fn n_cells(&self) -> usize {
        self.columns * self.rows
    }

    /// Cell index of `(column, row)`.
    pub fn cell(&self, column: usize, row: usize) -> usize {
        row * self.columns + column
    }
}

/// Per-type stochastic rows over grid cells: density at each cell centre, renormalized.
pub fn build_gaussian_obs(params: &GaussianObsModel) -> Result<Vec<Vec<f64>>> {
    if params.columns == 0 || params.rows == 0 {
        return Err(Error::InvalidArgument("grid must have at least one cell".into()));
    }
    if params.means.len() != params.covariances.len() || params.means.is_empty() {
        return Err(Error::InvalidArgument("one mean and one covariance per type".into()));
    }
    params
        .means
        .iter()
        .zip(&params.covariances)
        .enumerate()
        .map(|(t, (mean, cov))| {
            let [[a, b], [c, d]] = *cov;
            let det = a * d - b * c;
            if b != c || !(a > 0.0) || !(det > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "covariance of type {t} is not symmetric positive definite"
                )));
            }
            let inv = [[d / det, -b / det], [-c / det, a / det]];
            let mut row: Vec<f64> = (0..params.n_cells())
                .map(|i| {
                    let (col, r) = (i % params.columns, i / params.columns);
                    let dx = col as f64 + 0.5 - mean[0];
                    let dy = r as f64 + 0.5 - mean[1];
                    let q = dx * (inv[0][0] * dx + inv[0][1] * dy) + dy * (inv[1][0] * dx + inv[1][1] * dy);
                    (-0.5 * q).exp()
                })
                .collect();
            let total: f64 = row.iter().sum();
            if !(total > 0.0) {
                return Err(Error::InvalidArgument(format!("type {t} puts no mass on the grid")));
            }
            row.iter_mut().for_each(|p| *p /= total);
            Ok(row)
        })
        .collect()
}
