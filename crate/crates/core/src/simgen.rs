//! Contaminated scenario generators and detection counts.
//!
//! Two families:
//! - multivariate: `n - floor(eps n)` standard normal rows in dimension `p`
//!   plus `floor(eps n)` copies of the point `(x0, 0, ..., 0)`;
//! - functional: curves on the 101-point unit grid, central mean
//!   `30 t (1 - t)^{3/2}` plus Ornstein-Uhlenbeck noise, with outliers of
//!   shape (Case A), level shift (Case B) or local shift (Case C).

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::rng::RngStream;
use crate::rt::TrimResult;
use crate::types::{Grid, Label, ObservationSet};

/// Variance of the Ornstein-Uhlenbeck noise.
pub const OU_VARIANCE: f64 = 0.3;
/// Correlation length of the Ornstein-Uhlenbeck noise.
pub const OU_LENGTH: f64 = 0.3;
/// Size of the Case B / Case C level shift.
pub const SHIFT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionalCase {
    /// Mirrored shape `30 (1 - t) t^{3/2}`.
    A,
    /// Level shift by 2 everywhere.
    B,
    /// Level shift by 2 on `[0.4, 0.6]` only.
    C,
}

impl fmt::Display for FunctionalCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
        })
    }
}

impl FromStr for FunctionalCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            "C" | "c" => Ok(Self::C),
            other => Err(Error::InvalidConfig(format!(
                "unknown functional case '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Multivariate { p: usize, x0: f64 },
    Functional { case: FunctionalCase },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub family: Family,
    pub n: usize,
    pub eps: f64,
}

impl ScenarioSpec {
    pub fn multivariate(n: usize, p: usize, eps: f64, x0: f64) -> Self {
        Self {
            family: Family::Multivariate { p, x0 },
            n,
            eps,
        }
    }

    pub fn functional(case: FunctionalCase, n: usize, eps: f64) -> Self {
        Self {
            family: Family::Functional { case },
            n,
            eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.eps) {
            return Err(Error::InvalidConfig(format!(
                "eps must lie in [0, 0.5), got {}",
                self.eps
            )));
        }
        match self.family {
            Family::Multivariate { p, x0 } => {
                if p == 0 {
                    return Err(Error::InvalidConfig("p must be at least 1".into()));
                }
                if !x0.is_finite() {
                    return Err(Error::NonFinite("x0"));
                }
            }
            Family::Functional { .. } => {}
        }
        Ok(())
    }

    /// Exact number of contaminated rows, `floor(eps n)`.
    pub fn outlier_count(&self) -> usize {
        (self.eps * self.n as f64 + 1e-9).floor() as usize
    }
}

fn shuffled_labels(n: usize, outliers: usize, rng: &mut impl Rng) -> Vec<Label> {
    let mut labels: Vec<Label> = (0..n)
        .map(|i| {
            if i < n - outliers {
                Label::Core
            } else {
                Label::Outlier
            }
        })
        .collect();
    labels.shuffle(rng);
    labels
}

/// Point-mass contamination of a standard normal sample.
pub fn gen_multivariate(spec: &ScenarioSpec, stream: &RngStream) -> Result<ObservationSet> {
    spec.validate()?;
    let Family::Multivariate { p, x0 } = spec.family else {
        return Err(Error::InvalidConfig("scenario is not multivariate".into()));
    };
    let mut rng = stream.rng();
    let labels = shuffled_labels(spec.n, spec.outlier_count(), &mut rng);
    let mut values = Array2::<f64>::zeros((spec.n, p));
    for (i, label) in labels.iter().enumerate() {
        match label {
            Label::Core => values
                .row_mut(i)
                .iter_mut()
                .for_each(|v| *v = rng.sample(StandardNormal)),
            Label::Outlier => values[[i, 0]] = x0,
        }
    }
    ObservationSet::new(values)?.with_labels(labels)
}

/// `K_ij = 0.3 exp(-|t_i - t_j| / 0.3)`.
pub fn ou_covariance(grid: &Grid) -> Array2<f64> {
    let t = grid.points();
    Array2::from_shape_fn((t.len(), t.len()), |(i, j)| {
        OU_VARIANCE * (-(t[i] - t[j]).abs() / OU_LENGTH).exp()
    })
}

/// Correlation surface of the noise, `exp(-|s - t| / 0.3)`.
pub fn ou_correlation(grid: &Grid) -> Array2<f64> {
    ou_covariance(grid) / OU_VARIANCE
}

pub fn central_mean(t: f64) -> f64 {
    30.0 * t * (1.0 - t).powf(1.5)
}

/// Mean curve of the contaminating rows.
pub fn outlier_mean(case: FunctionalCase, t: f64) -> f64 {
    match case {
        FunctionalCase::A => 30.0 * (1.0 - t) * t.powf(1.5),
        FunctionalCase::B => central_mean(t) + SHIFT,
        FunctionalCase::C => {
            if (0.4..=0.6).contains(&t) {
                central_mean(t) + SHIFT
            } else {
                central_mean(t)
            }
        }
    }
}

/// Functional scenario sampler holding the noise factor.
#[derive(Debug, Clone)]
pub struct FunctionalGenerator {
    case: FunctionalCase,
    grid: Grid,
    noise_factor: Array2<f64>,
}

impl FunctionalGenerator {
    pub fn new(case: FunctionalCase, grid: Grid) -> Result<Self> {
        let noise_factor = cholesky(&ou_covariance(&grid))?;
        Ok(Self {
            case,
            grid,
            noise_factor,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn true_mean(&self) -> Array1<f64> {
        self.grid
            .points()
            .iter()
            .map(|&t| central_mean(t))
            .collect()
    }

    pub fn true_covariance(&self) -> Array2<f64> {
        ou_covariance(&self.grid)
    }

    pub fn true_correlation(&self) -> Array2<f64> {
        ou_correlation(&self.grid)
    }

    pub fn generate(&self, n: usize, eps: f64, stream: &RngStream) -> Result<ObservationSet> {
        let spec = ScenarioSpec::functional(self.case, n, eps);
        spec.validate()?;
        let mut rng = stream.rng();
        let labels = shuffled_labels(n, spec.outlier_count(), &mut rng);
        let d = self.grid.len();
        let core = self.true_mean();
        let shifted: Array1<f64> = self
            .grid
            .points()
            .iter()
            .map(|&t| outlier_mean(self.case, t))
            .collect();
        let mut values = Array2::<f64>::zeros((n, d));
        let mut z = Array1::<f64>::zeros(d);
        for (i, label) in labels.iter().enumerate() {
            z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            let noise = self.noise_factor.dot(&z);
            let mean = if *label == Label::Core {
                &core
            } else {
                &shifted
            };
            values.row_mut(i).assign(&(mean + &noise));
        }
        ObservationSet::new(values)?
            .with_grid(self.grid.clone())?
            .with_labels(labels)
    }
}

/// One functional sample on the 101-point unit grid.
pub fn gen_functional(spec: &ScenarioSpec, stream: &RngStream) -> Result<ObservationSet> {
    spec.validate()?;
    let Family::Functional { case } = spec.family else {
        return Err(Error::InvalidConfig("scenario is not functional".into()));
    };
    FunctionalGenerator::new(case, Grid::unit_interval())?.generate(spec.n, spec.eps, stream)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub outliers_pruned: usize,
    pub core_pruned: usize,
    pub gamma: f64,
}

pub fn detection_metrics(
    result: &TrimResult,
    labels: Option<&[Label]>,
) -> Result<DetectionMetrics> {
    let labels = labels.ok_or(Error::MissingLabels)?;
    if labels.len() != result.n() {
        return Err(Error::DimensionMismatch {
            expected: result.n(),
            found: labels.len(),
        });
    }
    let outliers_pruned = result
        .trimmed
        .iter()
        .filter(|r| labels[r.trimmed_index] == Label::Outlier)
        .count();
    Ok(DetectionMetrics {
        outliers_pruned,
        core_pruned: result.trimmed.len() - outliers_pruned,
        gamma: result.gamma,
    })
}
