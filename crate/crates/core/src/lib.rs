//! Two-stage density clustering for driving anomaly detection.
//!
//! Sensor samples are windowed into events carrying 20 aggregate statistics,
//! the linear dependence on speed is removed, and events are clustered twice
//! with an HDBSCAN engine. An event that does not land in the dominant cluster
//! of every per-axis clustering of its group is reported as an anomaly.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, IO and the CLI
//! live in the `addcat` crate.

#![no_std]
#![warn(clippy::std_instead_of_alloc)]
#![warn(clippy::std_instead_of_core)]

extern crate alloc;

mod error;
pub mod eval;
pub mod features;
pub mod hdbscan;
pub mod pipeline;
pub mod sample;
pub mod stats;
pub mod synth;
mod warning;

pub use self::features::{Event, Feature, FeatureVector, FEATURE_COUNT};
pub use self::sample::{GroundTruth, RawSample, TruthEntry};
pub use self::{error::*, warning::*};

/// Nominal sensor rate of the source data, in Hz.
pub const SAMPLE_RATE_HZ: f64 = 5.0;

/// Multiplier from m/s to km/h.
pub const KPH_PER_MPS: f64 = 3.6;
