use core::fmt;

use crate::pipeline::{Axis, Group};

/// Non-fatal conditions surfaced to the caller instead of being logged here.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Fewer samples than one window; no events were produced.
    NotEnoughSamples { samples: usize, window_size: usize },
    /// A trailing partial window was dropped.
    PartialWindowDropped { samples: usize },
    /// Fit could not be computed; the feature is calibrated as a residual.
    DegenerateFit { feature: &'static str },
    /// The fitted slope is too small to divide by; residual calibration used.
    FlatSlope { feature: &'static str, slope: f64 },
    /// A constant column was normalized to zeros.
    ConstantColumn { feature: &'static str },
    /// No cluster survived selection, so the root was allowed to form one.
    SingleClusterFallback { run: &'static str },
    /// A second-stage group is too small to cluster; every member is noise.
    GroupTooSmall {
        group: Group,
        axis: Axis,
        size: usize,
    },
    /// A second-stage run found no cluster; the whole group is anomalous.
    NoClusterInGroup { group: Group, axis: Axis },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NotEnoughSamples {
                samples,
                window_size,
            } => write!(
                f,
                "only {samples} samples, fewer than one window of {window_size}"
            ),
            Warning::PartialWindowDropped { samples } => {
                write!(f, "dropped {samples} trailing samples of a partial window")
            }
            Warning::DegenerateFit { feature } => write!(
                f,
                "{feature}: speed means are all identical, calibrating as residual"
            ),
            Warning::FlatSlope { feature, slope } => write!(
                f,
                "{feature}: slope {slope:e} is too flat, calibrating as residual"
            ),
            Warning::ConstantColumn { feature } => {
                write!(f, "{feature}: constant column normalized to zeros")
            }
            Warning::SingleClusterFallback { run } => write!(
                f,
                "{run}: no cluster selected, retried allowing a single cluster"
            ),
            Warning::GroupTooSmall { group, axis, size } => write!(
                f,
                "{group} group ({size} events) too small for {axis}-axis clustering; all marked noise"
            ),
            Warning::NoClusterInGroup { group, axis } => write!(
                f,
                "{axis}-axis clustering of the {group} group found no cluster; whole group is anomalous"
            ),
        }
    }
}
