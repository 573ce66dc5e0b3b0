//! Classical estimators on a hard-rejection weighted sample.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::types::ObservationSet;

fn kept_rows(data: &ObservationSet, weights: &[u8]) -> Result<Vec<usize>> {
    if weights.len() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            found: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|&&w| w > 1) {
        return Err(Error::InvalidInput(format!(
            "weights must be 0 or 1, found {w}"
        )));
    }
    Ok((0..data.n()).filter(|&i| weights[i] == 1).collect())
}

/// `sum w_i x_i / sum w_i`.
pub fn weighted_mean(data: &ObservationSet, weights: &[u8]) -> Result<Array1<f64>> {
    let rows = kept_rows(data, weights)?;
    if rows.is_empty() {
        return Err(Error::EmptySubsample);
    }
    Ok(data
        .values()
        .select(Axis(0), &rows)
        .mean_axis(Axis(0))
        .expect("non-empty"))
}

/// `sum w_i (x_i - mu)(x_i - mu)^T / sum w_i` (divisor is the kept count).
pub fn weighted_covariance(data: &ObservationSet, weights: &[u8]) -> Result<Array2<f64>> {
    let rows = kept_rows(data, weights)?;
    if rows.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            found: rows.len(),
        });
    }
    let kept = data.values().select(Axis(0), &rows);
    let mean = kept.mean_axis(Axis(0)).expect("non-empty");
    let centred = &kept - &mean;
    let mut cov = centred.t().dot(&centred) / rows.len() as f64;
    // exact symmetry
    let d = cov.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (cov[[i, j]] + cov[[j, i]]);
            cov[[i, j]] = v;
            cov[[j, i]] = v;
        }
    }
    Ok(cov)
}

/// `R_ij = S_ij / sqrt(S_ii S_jj)`, clamped to `[-1, 1]` with a unit diagonal.
pub fn correlation_from_covariance(cov: &Array2<f64>) -> Result<Array2<f64>> {
    let (r, c) = cov.dim();
    if r != c {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: c,
        });
    }
    let diag = cov.diag();
    if let Some(i) = diag.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "covariance diagonal entry {i} is {} (must be positive)",
            diag[i]
        )));
    }
    let sd: Array1<f64> = diag.mapv(f64::sqrt);
    Ok(Array2::from_shape_fn((r, r), |(i, j)| {
        if i == j {
            1.0
        } else {
            (cov[[i, j]] / (sd[i] * sd[j])).clamp(-1.0, 1.0)
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    /// Leading eigenvalues of the weighted covariance, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// Row `j` is the component (a curve on the grid in functional mode)
    /// belonging to `eigenvalues[j]`.
    pub components: Array2<f64>,
}

/// Top-`q` eigenpairs of the weighted covariance.
pub fn trimmed_pca(data: &ObservationSet, weights: &[u8], q: usize) -> Result<Pca> {
    if q == 0 || q > data.d() {
        return Err(Error::InvalidInput(format!(
            "component count must lie in 1..={}, got {q}",
            data.d()
        )));
    }
    let cov = weighted_covariance(data, weights)?;
    let eig = symmetric_eigen(&cov)?;
    Ok(Pca {
        eigenvalues: eig.values.iter().take(q).copied().collect(),
        components: eig.vectors.slice(ndarray::s![.., ..q]).t().to_owned(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateBundle {
    pub mean: Array1<f64>,
    pub covariance: Array2<f64>,
    pub correlation: Array2<f64>,
    pub pca: Option<Pca>,
}

impl EstimateBundle {
    /// All estimates on the rows with weight 1; PCA only when `components` is set.
    pub fn compute(
        data: &ObservationSet,
        weights: &[u8],
        components: Option<usize>,
    ) -> Result<Self> {
        let mean = weighted_mean(data, weights)?;
        let covariance = weighted_covariance(data, weights)?;
        let correlation = correlation_from_covariance(&covariance)?;
        let pca = components
            .map(|q| trimmed_pca(data, weights, q))
            .transpose()?;
        Ok(Self {
            mean,
            covariance,
            correlation,
            pca,
        })
    }
}

/// Root mean squared difference over the grid points (uniform `1/N` weights).
pub fn l2_error_mean(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("empty curves".into()));
    }
    let ss: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / truth.len() as f64).sqrt())
}

/// `||estimate - truth||_F / N` for `N x N` surfaces.
pub fn l2_error_cov(estimate: &Array2<f64>, truth: &Array2<f64>) -> Result<f64> {
    let (n, m) = truth.dim();
    if n != m || estimate.dim() != truth.dim() {
        return Err(Error::InvalidInput(format!(
            "shape mismatch: {:?} vs {:?} (both must be square and equal)",
            estimate.dim(),
            truth.dim()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty surfaces".into()));
    }
    let ss: f64 = estimate
        .iter()
        .zip(truth.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(ss.sqrt() / n as f64)
}
