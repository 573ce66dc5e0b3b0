//! Random-projection trimming.
//!
//! Each iteration draws a random direction and projects the active rows on
//! it. If the largest spacing of the projected sample reaches the threshold,
//! the row whose projection lies farthest from the projected median is
//! trimmed. Otherwise the direction counts as unproductive. The loop ends
//! when the trimming budget `floor(n * alpha)` is spent, when `maxiter`
//! unproductive directions have been seen, or when fewer than three rows
//! remain.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project_rows, random_unit_direction, DirectionLaw};
use crate::rng::{RngStream, StreamRng, CALIBRATION, DIRECTIONS};
use crate::stats::{mad_scale, median_of_sorted, normal_pdf, quantile_of_sorted, sorted};
use crate::types::{Grid, ObservationSet, UnitDirection};

/// Smallest active sample the procedure will still project.
pub const MIN_ACTIVE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `k (ln m - ln ln m) / (m f0)` with the configured constants.
    PaperFixed,
    /// As `PaperFixed` with `f0 = phi(3) / sigma`, `sigma` the MAD scale of the
    /// projections.
    ScaleAdaptive,
    /// `sigma` times an upper quantile of the max gap of `m` standard normals.
    #[default]
    NullQuantile,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PaperFixed => "paper_fixed",
            Self::ScaleAdaptive => "scale_adaptive",
            Self::NullQuantile => "null_quantile",
        })
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "paper_fixed" => Ok(Self::PaperFixed),
            "scale_adaptive" => Ok(Self::ScaleAdaptive),
            "null_quantile" => Ok(Self::NullQuantile),
            _ => Err(Error::InvalidConfig(format!(
                "unknown threshold mode '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterMode {
    /// Unproductive directions accumulate over the whole run.
    #[default]
    Cumulative,
    /// The unproductive counter restarts after every trim.
    ResetOnTrim,
}

impl fmt::Display for CounterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cumulative => "cumulative",
            Self::ResetOnTrim => "reset_on_trim",
        })
    }
}

impl FromStr for CounterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "cumulative" => Ok(Self::Cumulative),
            "reset_on_trim" => Ok(Self::ResetOnTrim),
            _ => Err(Error::InvalidConfig(format!("unknown counter mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtConfig {
    /// Upper bound on the trimmed fraction, in `[0, 0.5]`.
    pub alpha: f64,
    /// Number of unproductive directions tolerated before stopping.
    pub maxiter: usize,
    pub k: f64,
    /// Density floor `f(x0)` of the fixed threshold.
    pub f0: f64,
    pub threshold_mode: ThresholdMode,
    pub quantile: f64,
    pub null_reps: usize,
    pub counter_mode: CounterMode,
    pub direction_law: DirectionLaw,
    pub seed: u64,
}

impl Default for RtConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            maxiter: 100,
            k: 3.0,
            f0: 0.0044,
            threshold_mode: ThresholdMode::NullQuantile,
            quantile: 0.999,
            null_reps: 200,
            counter_mode: CounterMode::Cumulative,
            direction_law: DirectionLaw::White,
            seed: 0,
        }
    }
}

impl RtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in [0, 0.5], got {}",
                self.alpha
            )));
        }
        if self.maxiter == 0 {
            return Err(Error::InvalidConfig("maxiter must be at least 1".into()));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "k must be positive, got {}",
                self.k
            )));
        }
        if !(self.f0 > 0.0 && self.f0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "f0 must be positive, got {}",
                self.f0
            )));
        }
        if self.threshold_mode == ThresholdMode::NullQuantile {
            if !(self.quantile > 0.0 && self.quantile < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "quantile must lie in (0, 1), got {}",
                    self.quantile
                )));
            }
            if self.null_reps == 0 {
                return Err(Error::InvalidConfig("null_reps must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// `floor(n * alpha)`, robust to representation error in `alpha`.
    pub fn budget(&self, n: usize) -> usize {
        (n as f64 * self.alpha + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimRecord {
    /// 1-based ordinal of the direction that produced the trim.
    pub direction_ordinal: usize,
    pub trimmed_index: usize,
    pub gap: f64,
    pub threshold: f64,
    pub distance_from_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimResult {
    pub weights: Vec<u8>,
    pub kept: Vec<usize>,
    pub trimmed: Vec<TrimRecord>,
    pub directions_consumed: usize,
    pub gamma: f64,
}

impl TrimResult {
    pub(crate) fn from_records(
        n: usize,
        trimmed: Vec<TrimRecord>,
        directions_consumed: usize,
    ) -> Self {
        let mut weights = vec![1u8; n];
        for r in &trimmed {
            weights[r.trimmed_index] = 0;
        }
        let kept = (0..n).filter(|&i| weights[i] == 1).collect();
        let gamma = trimmed.len() as f64 / n as f64;
        Self {
            weights,
            kept,
            trimmed,
            directions_consumed,
            gamma,
        }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Trimmed row indices in trimming order.
    pub fn trimmed_indices(&self) -> Vec<usize> {
        self.trimmed.iter().map(|r| r.trimmed_index).collect()
    }
}

/// Largest spacing of a nondecreasing sample and the 0-based position of the
/// left end of the first interval attaining it.
pub fn max_gap(sorted_projections: &[f64]) -> Result<(f64, usize)> {
    if sorted_projections.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            found: sorted_projections.len(),
        });
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, w) in sorted_projections.windows(2).enumerate() {
        let gap = (w[1] - w[0]).abs();
        if gap > best.0 {
            best = (gap, i);
        }
    }
    Ok(best)
}

/// Spacing threshold `k (ln m - ln ln m) / (m f0)`.
pub fn deheuvels_threshold(m: usize, k: f64, f0: f64) -> Result<f64> {
    if m < MIN_ACTIVE {
        return Err(Error::TooFewObservations {
            needed: MIN_ACTIVE,
            found: m,
        });
    }
    if !(k > 0.0 && f0 > 0.0) {
        return Err(Error::InvalidConfig("k and f0 must be positive".into()));
    }
    let ln_m = (m as f64).ln();
    Ok(k * (ln_m - ln_m.ln()) / (m as f64 * f0))
}

/// Empirical `quantile` of the max gap of `m` standard normals over `reps`
/// samples drawn from `stream`.
pub fn null_max_gap_quantile(
    m: usize,
    quantile: f64,
    reps: usize,
    stream: &RngStream,
) -> Result<f64> {
    if m < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            found: m,
        });
    }
    if reps == 0 {
        return Err(Error::InvalidConfig("null_reps must be at least 1".into()));
    }
    let mut rng = stream.rng();
    let mut sample = vec![0.0; m];
    let mut gaps = Vec::with_capacity(reps);
    for _ in 0..reps {
        for z in sample.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        sample.sort_by(f64::total_cmp);
        gaps.push(max_gap(&sample)?.0);
    }
    gaps.sort_by(f64::total_cmp);
    Ok(quantile_of_sorted(&gaps, quantile))
}

/// Calibration stream for active size `m` under `cfg`.
pub fn calibration_stream(cfg: &RtConfig, m: usize) -> RngStream {
    RngStream::new(cfg.seed, CALIBRATION).substream(m as u64)
}

/// Threshold in force for one projected sample.
///
/// Adaptive modes return [`Error::DegenerateDirection`] when the projections
/// have zero MAD spread.
pub fn effective_threshold(projections: &[f64], cfg: &RtConfig) -> Result<f64> {
    ThresholdPolicy::new(cfg).threshold(projections)
}

/// Threshold evaluation with null quantiles cached per active size.
#[derive(Debug)]
pub struct ThresholdPolicy<'a> {
    cfg: &'a RtConfig,
    null_cache: HashMap<usize, f64>,
}

impl<'a> ThresholdPolicy<'a> {
    pub fn new(cfg: &'a RtConfig) -> Self {
        Self {
            cfg,
            null_cache: HashMap::new(),
        }
    }

    pub fn threshold(&mut self, projections: &[f64]) -> Result<f64> {
        let m = projections.len();
        if m < MIN_ACTIVE {
            return Err(Error::TooFewObservations {
                needed: MIN_ACTIVE,
                found: m,
            });
        }
        let cfg = self.cfg;
        match cfg.threshold_mode {
            ThresholdMode::PaperFixed => deheuvels_threshold(m, cfg.k, cfg.f0),
            ThresholdMode::ScaleAdaptive => {
                let sigma = spread(projections)?;
                deheuvels_threshold(m, cfg.k, normal_pdf(3.0) / sigma)
            }
            ThresholdMode::NullQuantile => {
                let sigma = spread(projections)?;
                let q = match self.null_cache.get(&m) {
                    Some(q) => *q,
                    None => {
                        let q = null_max_gap_quantile(
                            m,
                            cfg.quantile,
                            cfg.null_reps,
                            &calibration_stream(cfg, m),
                        )?;
                        self.null_cache.insert(m, q);
                        q
                    }
                };
                Ok(sigma * q)
            }
        }
    }
}

fn spread(projections: &[f64]) -> Result<f64> {
    let sigma = mad_scale(projections);
    if sigma > 0.0 && sigma.is_finite() {
        Ok(sigma)
    } else {
        Err(Error::DegenerateDirection)
    }
}

/// Gap and median statistics of one projected active sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionStats {
    pub gap: f64,
    pub median: f64,
    /// Position (within the active list) of the farthest-from-median row.
    pub farthest: usize,
    pub distance_from_median: f64,
}

pub fn direction_stats(projections: &[f64]) -> Result<DirectionStats> {
    let s = sorted(projections);
    let (gap, _) = max_gap(&s)?;
    let median = median_of_sorted(&s);
    let mut farthest = 0;
    let mut distance = f64::NEG_INFINITY;
    for (pos, y) in projections.iter().enumerate() {
        let dist = (y - median).abs();
        if dist > distance {
            distance = dist;
            farthest = pos;
        }
    }
    Ok(DirectionStats {
        gap,
        median,
        farthest,
        distance_from_median: distance,
    })
}

/// One trimming decision: the row to trim along `h` under threshold `c_d`.
///
/// `active` must be sorted ascending for the tie rule (smallest row index wins)
/// to hold.
pub fn trim_step(
    data: &ObservationSet,
    active: &[usize],
    h: &UnitDirection,
    c_d: f64,
) -> Result<Option<usize>> {
    if active.len() < MIN_ACTIVE {
        return Err(Error::TooFewObservations {
            needed: MIN_ACTIVE,
            found: active.len(),
        });
    }
    let y = project_rows(data, active, h)?;
    let stats = direction_stats(&y)?;
    Ok((stats.gap >= c_d).then(|| active[stats.farthest]))
}

/// Supplies the directions consumed by [`select_subsample_with`].
pub trait DirectionSource {
    fn next_direction(&mut self) -> Result<UnitDirection>;
}

/// Directions drawn from the `"directions"` stream of a seed.
#[derive(Debug, Clone)]
pub struct RandomDirections {
    rng: StreamRng,
    dim: usize,
    law: DirectionLaw,
    grid: Option<Grid>,
}

impl RandomDirections {
    pub fn new(seed: u64, dim: usize, law: DirectionLaw, grid: Option<Grid>) -> Self {
        Self {
            rng: RngStream::new(seed, DIRECTIONS).rng(),
            dim,
            law,
            grid,
        }
    }

    pub fn for_data(data: &ObservationSet, cfg: &RtConfig) -> Self {
        Self::new(cfg.seed, data.d(), cfg.direction_law, data.grid().cloned())
    }
}

impl DirectionSource for RandomDirections {
    fn next_direction(&mut self) -> Result<UnitDirection> {
        random_unit_direction(&mut self.rng, self.dim, self.law, self.grid.as_ref())
    }
}

/// A fixed, finite list of directions.
#[derive(Debug, Clone)]
pub struct DirectionSequence {
    directions: std::vec::IntoIter<UnitDirection>,
    served: usize,
}

impl DirectionSequence {
    pub fn new(directions: Vec<UnitDirection>) -> Self {
        Self {
            directions: directions.into_iter(),
            served: 0,
        }
    }
}

impl DirectionSource for DirectionSequence {
    fn next_direction(&mut self) -> Result<UnitDirection> {
        let h = self
            .directions
            .next()
            .ok_or(Error::DirectionsExhausted(self.served))?;
        self.served += 1;
        Ok(h)
    }
}

/// Runs the trimming procedure with directions from the configured seed.
pub fn select_subsample(data: &ObservationSet, cfg: &RtConfig) -> Result<TrimResult> {
    let mut source = RandomDirections::for_data(data, cfg);
    select_subsample_with(data, cfg, &mut source)
}

/// Runs the trimming procedure with an explicit direction source.
pub fn select_subsample_with<S: DirectionSource + ?Sized>(
    data: &ObservationSet,
    cfg: &RtConfig,
    source: &mut S,
) -> Result<TrimResult> {
    cfg.validate()?;
    let n = data.n();
    if n < MIN_ACTIVE {
        return Err(Error::TooFewObservations {
            needed: MIN_ACTIVE,
            found: n,
        });
    }
    let budget = cfg.budget(n);
    let mut policy = ThresholdPolicy::new(cfg);
    let mut active: Vec<usize> = (0..n).collect();
    let mut records = Vec::new();
    let mut unproductive = 0usize;
    let mut consumed = 0usize;

    while records.len() < budget && active.len() >= MIN_ACTIVE && unproductive < cfg.maxiter {
        let h = source.next_direction()?;
        consumed += 1;
        let y = project_rows(data, &active, &h)?;
        let threshold = match policy.threshold(&y) {
            Ok(c) => c,
            Err(Error::DegenerateDirection) => {
                unproductive += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let stats = direction_stats(&y)?;
        if stats.gap >= threshold {
            let row = active.remove(stats.farthest);
            records.push(TrimRecord {
                direction_ordinal: consumed,
                trimmed_index: row,
                gap: stats.gap,
                threshold,
                distance_from_median: stats.distance_from_median,
            });
            if cfg.counter_mode == CounterMode::ResetOnTrim {
                unproductive = 0;
            }
        } else {
            unproductive += 1;
        }
    }
    Ok(TrimResult::from_records(n, records, consumed))
}
