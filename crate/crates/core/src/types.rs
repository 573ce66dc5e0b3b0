use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling locations of discretized curves.
///
/// Keeps the trapezoidal quadrature weights alongside the points, so that
/// `sum_i w_i f(t_i)` approximates the integral of `f` over the grid span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("grid"));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "points must be strictly increasing (positions {} and {})",
                i,
                i + 1
            )));
        }
        let d = points.len();
        let weights = (0..d)
            .map(|i| {
                let left = if i > 0 {
                    points[i] - points[i - 1]
                } else {
                    0.0
                };
                let right = if i + 1 < d {
                    points[i + 1] - points[i]
                } else {
                    0.0
                };
                0.5 * (left + right)
            })
            .collect();
        Ok(Self { points, weights })
    }

    /// `len` equispaced points from `start` to `end` inclusive.
    pub fn uniform(len: usize, start: f64, end: f64) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {len}"
            )));
        }
        let steps = (len - 1) as f64;
        let points = (0..len)
            .map(|i| start + (end - start) * (i as f64) / steps)
            .collect();
        Self::new(points)
    }

    /// The 101-point grid {0, 0.01, ..., 1} used by the functional scenarios.
    pub fn unit_interval() -> Self {
        Self::uniform(101, 0.0, 1.0).expect("static grid is valid")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Per-interval widths `t_{i+1} - t_i`.
    pub fn spacing(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn trapezoid_weights(&self) -> &[f64] {
        &self.weights
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(grid: Grid) -> Self {
        grid.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Core,
    Outlier,
}

/// `n` observations of `d` coordinates each.
///
/// With a grid attached the rows are curves sampled at the grid points and
/// all geometry uses the trapezoidal L2 inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    values: Array2<f64>,
    grid: Option<Grid>,
    labels: Option<Vec<Label>>,
}

impl ObservationSet {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, d) = values.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!(
                "observation matrix must be non-empty, got {n}x{d}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observations"));
        }
        Ok(Self {
            values,
            grid: None,
            labels: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values =
            Array2::from_shape_vec((n, d), flat).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(values)
    }

    pub fn with_grid(mut self, grid: Grid) -> Result<Self> {
        if grid.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: grid.len(),
            });
        }
        self.grid = Some(grid);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn is_functional(&self) -> bool {
        self.grid.is_some()
    }

    /// Same grid and labels, new values (shape must match).
    pub fn map_values(&self, values: Array2<f64>) -> Result<Self> {
        if values.dim() != self.values.dim() {
            return Err(Error::InvalidInput(format!(
                "shape {:?} does not match {:?}",
                values.dim(),
                self.values.dim()
            )));
        }
        let mut out = Self::new(values)?;
        out.grid = self.grid.clone();
        out.labels = self.labels.clone();
        Ok(out)
    }
}

/// A direction of norm one in the geometry of the data it projects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitDirection {
    coords: Array1<f64>,
}

impl UnitDirection {
    /// Normalizes `raw` (Euclidean without a grid, trapezoidal L2 with one).
    pub fn normalize(raw: Array1<f64>, grid: Option<&Grid>) -> Result<Self> {
        if let Some(g) = grid {
            if g.len() != raw.len() {
                return Err(Error::DimensionMismatch {
                    expected: g.len(),
                    found: raw.len(),
                });
            }
        }
        let norm = crate::geometry::norm(raw.view(), grid)?;
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidInput(
                "cannot normalize a zero or non-finite direction".into(),
            ));
        }
        Ok(Self { coords: raw / norm })
    }

    pub fn coords(&self) -> &Array1<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}
