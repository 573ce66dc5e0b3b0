//! Replicated simulation of RT, IT and trick estimators on one scenario.
//!
//! Replicate `r` draws everything from seeds derived from
//! `(master_seed, r)`, so results do not depend on scheduling. Per-replicate
//! outcomes are collected in replicate order and reduced sequentially, which
//! keeps the floating-point aggregates identical at any thread count.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{it_trim, trick_weights, ItConfig};
use crate::error::{Error, Result};
use crate::estimators::{l2_error_cov, l2_error_mean, EstimateBundle};
use crate::linalg::frobenius;
use crate::rng::{derive_seed, RngStream, DATA};
use crate::rt::{select_subsample, RtConfig, TrimResult};
use crate::simgen::{
    detection_metrics, gen_multivariate, Family, FunctionalGenerator, ScenarioSpec,
};
use crate::types::{Grid, Label, ObservationSet};

pub const SCHEMA_VERSION: u32 = 1;
const REPLICATE_LABEL: &str = "replicate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Trick,
    Rt,
    It,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Trick => "trick",
            Self::Rt => "rt",
            Self::It => "it",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub scenario: ScenarioSpec,
    /// RT trimming bounds; the same values serve as IT trimming fractions.
    pub bounds: Vec<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    /// RT settings; `alpha` and `seed` are overridden per bound and replicate.
    pub rt: RtConfig,
    pub it_alpha_radius: f64,
}

impl MonteCarloConfig {
    pub fn new(
        scenario: ScenarioSpec,
        bounds: Vec<f64>,
        replicates: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            scenario,
            bounds,
            replicates,
            master_seed,
            rt: RtConfig::default(),
            it_alpha_radius: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.replicates == 0 {
            return Err(Error::InvalidConfig(
                "at least one replicate is required".into(),
            ));
        }
        if self.bounds.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one trimming bound is required".into(),
            ));
        }
        for &b in &self.bounds {
            self.rt_config(b, 0).validate()?;
            ItConfig {
                alpha_radius: self.it_alpha_radius,
                beta: b,
            }
            .validate()?;
        }
        Ok(())
    }

    /// Seed shared by the data and RT streams of replicate `r`.
    pub fn replicate_seed(&self, r: usize) -> u64 {
        derive_seed(self.master_seed, r as u64, REPLICATE_LABEL)
    }

    pub fn rt_config(&self, bound: f64, seed: u64) -> RtConfig {
        RtConfig {
            alpha: bound,
            seed,
            ..self.rt.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub location_error: f64,
    pub correlation_error: f64,
    pub outliers_pruned: usize,
    pub core_pruned: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOutcome {
    pub estimator: EstimatorKind,
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<ReplicateMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub estimator: EstimatorKind,
    pub bound: Option<f64>,
    pub replicates: usize,
    pub successes: usize,
    pub location_error: Option<f64>,
    pub correlation_error: Option<f64>,
    pub outliers_pruned: Option<f64>,
    pub core_pruned: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub schema_version: u32,
    pub config: MonteCarloConfig,
    pub rows: Vec<ReportRow>,
    pub replicates: Vec<ReplicateOutcome>,
    /// Elapsed time of the run; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl MonteCarloReport {
    pub fn row(&self, estimator: EstimatorKind, bound: Option<f64>) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.bound == bound)
    }
}

enum Generator {
    Multivariate(ScenarioSpec),
    Functional {
        spec: ScenarioSpec,
        generator: FunctionalGenerator,
        true_mean: Array1<f64>,
        true_correlation: Array2<f64>,
    },
}

impl Generator {
    fn new(spec: ScenarioSpec) -> Result<Self> {
        Ok(match spec.family {
            Family::Multivariate { .. } => Self::Multivariate(spec),
            Family::Functional { case } => {
                let generator = FunctionalGenerator::new(case, Grid::unit_interval())?;
                Self::Functional {
                    spec,
                    true_mean: generator.true_mean(),
                    true_correlation: generator.true_correlation(),
                    generator,
                }
            }
        })
    }

    fn generate(&self, seed: u64) -> Result<ObservationSet> {
        let stream = RngStream::new(seed, DATA);
        match self {
            Self::Multivariate(spec) => gen_multivariate(spec, &stream),
            Self::Functional {
                spec, generator, ..
            } => generator.generate(spec.n, spec.eps, &stream),
        }
    }

    fn errors(&self, bundle: &EstimateBundle) -> Result<(f64, f64)> {
        match self {
            Self::Multivariate(_) => {
                let p = bundle.mean.len();
                let location = bundle.mean.dot(&bundle.mean);
                let correlation =
                    frobenius(&(&bundle.correlation - &Array2::<f64>::eye(p))) / p as f64;
                Ok((location, correlation))
            }
            Self::Functional {
                true_mean,
                true_correlation,
                ..
            } => Ok((
                l2_error_mean(
                    bundle.mean.as_slice().expect("contiguous"),
                    true_mean.as_slice().expect("contiguous"),
                )?,
                l2_error_cov(&bundle.correlation, true_correlation)?,
            )),
        }
    }
}

/// Data of replicate `r`, as generated inside [`run_monte_carlo`].
pub fn replicate_data(cfg: &MonteCarloConfig, r: usize) -> Result<ObservationSet> {
    Generator::new(cfg.scenario)?.generate(cfg.replicate_seed(r))
}

fn evaluate(
    gen: &Generator,
    data: &ObservationSet,
    weights: &[u8],
    trim: Option<&TrimResult>,
) -> Result<ReplicateMetrics> {
    let bundle = EstimateBundle::compute(data, weights, None)?;
    let (location_error, correlation_error) = gen.errors(&bundle)?;
    let detection = match trim {
        Some(t) => detection_metrics(t, data.labels())?,
        None => {
            let labels = data.labels().ok_or(Error::MissingLabels)?;
            let outliers = labels.iter().filter(|l| **l == Label::Outlier).count();
            crate::simgen::DetectionMetrics {
                outliers_pruned: outliers,
                core_pruned: 0,
                gamma: outliers as f64 / data.n() as f64,
            }
        }
    };
    Ok(ReplicateMetrics {
        location_error,
        correlation_error,
        outliers_pruned: detection.outliers_pruned,
        core_pruned: detection.core_pruned,
        gamma: detection.gamma,
    })
}

fn outcome(
    estimator: EstimatorKind,
    bound: Option<f64>,
    result: Result<ReplicateMetrics>,
) -> EstimatorOutcome {
    let (metrics, error) = match result {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    EstimatorOutcome {
        estimator,
        bound,
        metrics,
        error,
    }
}

fn roster(cfg: &MonteCarloConfig) -> Vec<(EstimatorKind, Option<f64>)> {
    let mut roster = vec![(EstimatorKind::Trick, None)];
    roster.extend(cfg.bounds.iter().map(|&b| (EstimatorKind::Rt, Some(b))));
    roster.extend(cfg.bounds.iter().map(|&b| (EstimatorKind::It, Some(b))));
    roster
}

fn run_replicate(cfg: &MonteCarloConfig, gen: &Generator, r: usize) -> ReplicateOutcome {
    let seed = cfg.replicate_seed(r);
    let estimators = match gen.generate(seed) {
        Err(e) => roster(cfg)
            .into_iter()
            .map(|(kind, bound)| outcome(kind, bound, Err(e.clone())))
            .collect(),
        Ok(data) => roster(cfg)
            .into_iter()
            .map(|(kind, bound)| {
                let result = match (kind, bound) {
                    (EstimatorKind::Trick, _) => {
                        trick_weights(&data).and_then(|w| evaluate(gen, &data, &w, None))
                    }
                    (EstimatorKind::Rt, Some(b)) => {
                        select_subsample(&data, &cfg.rt_config(b, seed))
                            .and_then(|t| evaluate(gen, &data, &t.weights, Some(&t)))
                    }
                    (EstimatorKind::It, Some(b)) => it_trim(
                        &data,
                        &ItConfig {
                            alpha_radius: cfg.it_alpha_radius,
                            beta: b,
                        },
                    )
                    .and_then(|t| evaluate(gen, &data, &t.weights, Some(&t))),
                    _ => unreachable!("trimming estimators always carry a bound"),
                };
                outcome(kind, bound, result)
            })
            .collect(),
    };
    ReplicateOutcome {
        replicate: r,
        seed,
        estimators,
    }
}

fn aggregate(cfg: &MonteCarloConfig, replicates: &[ReplicateOutcome]) -> Vec<ReportRow> {
    roster(cfg)
        .into_iter()
        .enumerate()
        .map(|(slot, (estimator, bound))| {
            let metrics: Vec<&ReplicateMetrics> = replicates
                .iter()
                .filter_map(|rep| rep.estimators[slot].metrics.as_ref())
                .collect();
            let k = metrics.len();
            let avg = |f: &dyn Fn(&ReplicateMetrics) -> f64| {
                (k > 0).then(|| metrics.iter().map(|m| f(m)).sum::<f64>() / k as f64)
            };
            ReportRow {
                estimator,
                bound,
                replicates: replicates.len(),
                successes: k,
                location_error: avg(&|m| m.location_error),
                correlation_error: avg(&|m| m.correlation_error),
                outliers_pruned: avg(&|m| m.outliers_pruned as f64),
                core_pruned: avg(&|m| m.core_pruned as f64),
                gamma: avg(&|m| m.gamma),
            }
        })
        .collect()
}

/// Runs all replicates, on at most `threads` worker threads when given.
pub fn run_monte_carlo(cfg: &MonteCarloConfig, threads: Option<usize>) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let start = Instant::now();
    let gen = Generator::new(cfg.scenario)?;
    let work = || -> Vec<ReplicateOutcome> {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| run_replicate(cfg, &gen, r))
            .collect()
    };
    let replicates = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(MonteCarloReport {
        schema_version: SCHEMA_VERSION,
        rows: aggregate(cfg, &replicates),
        config: cfg.clone(),
        replicates,
        wall_time: start.elapsed(),
    })
}
