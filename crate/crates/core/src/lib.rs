//! Robust location and scatter estimation by random-projection trimming.
//!
//! Observations (finite-dimensional vectors or curves sampled on a grid) are
//! projected on random directions. Whenever the largest spacing of the
//! projected sample exceeds a threshold, the observation farthest from the
//! projected median is trimmed. Classical estimators are then computed on the
//! surviving subsample.
//!
//! Module map:
//! - [`types`], [`rng`], [`geometry`], [`linalg`]: shared kernel
//! - [`rt`]: the trimming procedure
//! - [`estimators`]: weighted mean / covariance / correlation / PCA, L2 errors
//! - [`baselines`]: oracle ("trick") and inter-distance trimming (IT)
//! - [`simgen`], [`montecarlo`]: scenario generators and the replicate runner

pub mod baselines;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod linalg;
pub mod montecarlo;
pub mod rng;
pub mod rt;
pub mod simgen;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use types::{Grid, Label, ObservationSet, UnitDirection};
