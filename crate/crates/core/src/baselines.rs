//! Comparison estimators: the label oracle and inter-distance trimming.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimateBundle;
use crate::geometry::distance;
use crate::rt::{TrimRecord, TrimResult};
use crate::types::{Label, ObservationSet};

/// Weights keeping exactly the rows labelled core.
pub fn trick_weights(data: &ObservationSet) -> Result<Vec<u8>> {
    let labels = data.labels().ok_or(Error::MissingLabels)?;
    Ok(labels.iter().map(|l| u8::from(*l == Label::Core)).collect())
}

/// Classical estimates on the uncontaminated rows only.
pub fn trick_estimate(data: &ObservationSet, components: Option<usize>) -> Result<EstimateBundle> {
    EstimateBundle::compute(data, &trick_weights(data)?, components)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItConfig {
    /// Fraction of the sample each ball must contain, in `(0, 1)`.
    pub alpha_radius: f64,
    /// Fraction of rows trimmed, in `[0, 0.5]`.
    pub beta: f64,
}

impl Default for ItConfig {
    fn default() -> Self {
        Self {
            alpha_radius: 0.5,
            beta: 0.1,
        }
    }
}

impl ItConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_radius > 0.0 && self.alpha_radius < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha_radius must lie in (0, 1), got {}",
                self.alpha_radius
            )));
        }
        if !(0.0..=0.5).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!(
                "beta must lie in [0, 0.5], got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Radius of the smallest ball around each row holding `ceil(alpha * n)` rows
/// (the row itself included).
pub fn it_alpha_radii(data: &ObservationSet, alpha_radius: f64) -> Result<Vec<f64>> {
    let n = data.n();
    if n < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            found: n,
        });
    }
    if !(alpha_radius > 0.0 && alpha_radius <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha_radius must lie in (0, 1], got {alpha_radius}"
        )));
    }
    let count = ((alpha_radius * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let grid = data.grid();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut dists = (0..n)
                .map(|j| distance(data.row(i), data.row(j), grid))
                .collect::<Result<Vec<f64>>>()?;
            let (_, kth, _) = dists.select_nth_unstable_by(count - 1, f64::total_cmp);
            Ok(*kth)
        })
        .collect()
}

/// Trims the `floor(beta * n)` rows with the largest radii.
///
/// Audit records carry the radius in `gap` and `distance_from_median` and the
/// cut radius in `threshold`; `direction_ordinal` is the rank.
pub fn it_trim(data: &ObservationSet, cfg: &ItConfig) -> Result<TrimResult> {
    cfg.validate()?;
    let n = data.n();
    let radii = it_alpha_radii(data, cfg.alpha_radius)?;
    let count = (cfg.beta * n as f64 + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]).then(a.cmp(&b)));
    let chosen = &order[..count];
    let cut = chosen.last().map_or(f64::INFINITY, |&i| radii[i]);
    let records = chosen
        .iter()
        .enumerate()
        .map(|(rank, &i)| TrimRecord {
            direction_ordinal: rank + 1,
            trimmed_index: i,
            gap: radii[i],
            threshold: cut,
            distance_from_median: radii[i],
        })
        .collect();
    Ok(TrimResult::from_records(n, records, 0))
}
