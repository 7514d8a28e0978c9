//! Windowing, speed calibration and normalization of aggregate statistics.

mod calibration;
mod normalize;
mod window;

pub use self::calibration::{
    calibrate, fit_speed_model, CalibrationModel, LinearFit, DEFAULT_EPSILON_SPEED, MIN_SLOPE,
};
pub use self::normalize::zscore;
pub use self::window::{window, DEFAULT_WINDOW_SIZE};

use serde::{Deserialize, Serialize};

/// Number of aggregate statistics per event.
pub const FEATURE_COUNT: usize = 20;

/// One value per [`Feature`], in [`Feature::ALL`] order.
pub type FeatureVector = [f64; FEATURE_COUNT];

/// The aggregate statistics, in their fixed vector layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    SpeedMean,
    SpeedStd,
    GsenXMax,
    GsenYMax,
    GsenZMax,
    GsenXMin,
    GsenYMin,
    GsenZMin,
    GsenXStd,
    GsenYStd,
    GsenZStd,
    GyroXMax,
    GyroYMax,
    GyroZMax,
    GyroXMin,
    GyroYMin,
    GyroZMin,
    GyroXStd,
    GyroYStd,
    GyroZStd,
}

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::SpeedMean,
        Feature::SpeedStd,
        Feature::GsenXMax,
        Feature::GsenYMax,
        Feature::GsenZMax,
        Feature::GsenXMin,
        Feature::GsenYMin,
        Feature::GsenZMin,
        Feature::GsenXStd,
        Feature::GsenYStd,
        Feature::GsenZStd,
        Feature::GyroXMax,
        Feature::GyroYMax,
        Feature::GyroZMax,
        Feature::GyroXMin,
        Feature::GyroYMin,
        Feature::GyroZMin,
        Feature::GyroXStd,
        Feature::GyroYStd,
        Feature::GyroZStd,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Feature> {
        Self::ALL.get(index).copied()
    }

    pub const fn name(self) -> &'static str {
        match self {
            Feature::SpeedMean => "speed_mean",
            Feature::SpeedStd => "speed_std",
            Feature::GsenXMax => "gsenX_max",
            Feature::GsenYMax => "gsenY_max",
            Feature::GsenZMax => "gsenZ_max",
            Feature::GsenXMin => "gsenX_min",
            Feature::GsenYMin => "gsenY_min",
            Feature::GsenZMin => "gsenZ_min",
            Feature::GsenXStd => "gsenX_std",
            Feature::GsenYStd => "gsenY_std",
            Feature::GsenZStd => "gsenZ_std",
            Feature::GyroXMax => "gyroX_max",
            Feature::GyroYMax => "gyroY_max",
            Feature::GyroZMax => "gyroZ_max",
            Feature::GyroXMin => "gyroX_min",
            Feature::GyroYMin => "gyroY_min",
            Feature::GyroZMin => "gyroZ_min",
            Feature::GyroXStd => "gyroX_std",
            Feature::GyroYStd => "gyroY_std",
            Feature::GyroZStd => "gyroZ_std",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl core::fmt::Display for Feature {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// A fixed-length window of samples summarized by its aggregate statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub index: usize,
    /// Timestamp of the first sample in the window.
    pub t_start: f64,
    /// Timestamp of the last sample in the window.
    pub t_end: f64,
    pub raw: FeatureVector,
    /// Filled by [`calibrate`].
    pub calibrated: Option<FeatureVector>,
    /// Filled by [`zscore`].
    pub normalized: Option<FeatureVector>,
    pub is_pothole: bool,
}

impl Event {
    pub fn new(index: usize, t_start: f64, t_end: f64, raw: FeatureVector) -> Self {
        Event {
            index,
            t_start,
            t_end,
            raw,
            calibrated: None,
            normalized: None,
            is_pothole: false,
        }
    }

    pub fn speed_mean(&self) -> f64 {
        self.raw[Feature::SpeedMean.index()]
    }

    pub fn raw_value(&self, feature: Feature) -> f64 {
        self.raw[feature.index()]
    }
}
