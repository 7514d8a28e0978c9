//! Removal of linear speed dependence.
//!
//! Each calibrated statistic `y` is fitted against the event's mean speed `x`
//! as `y = a·x + b`, then replaced by `c = (y − b) / (a·x)`. An event lying
//! exactly on its fitted line calibrates to 1 at every speed.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Event, Feature, FEATURE_COUNT};
use crate::{Error, Result, Warning};

/// Speeds below this floor (m/s) are clamped in the calibration denominator.
pub const DEFAULT_EPSILON_SPEED: f64 = 0.5;

/// Slopes with a smaller magnitude fall back to residual calibration.
pub const MIN_SLOPE: f64 = 1e-12;

/// Ordinary-least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Fits `feature` against each event's mean speed.
pub fn fit_speed_model(events: &[Event], feature: Feature) -> Result<LinearFit> {
    let xs = events.iter().map(Event::speed_mean);
    let ys = events.iter().map(|e| e.raw_value(feature));
    ols(xs, ys, events.len()).ok_or(if events.len() < 2 {
        Error::TooFewEvents {
            needed: 2,
            got: events.len(),
        }
    } else {
        Error::DegenerateFit {
            feature: feature.name(),
        }
    })
}

pub(crate) fn ols<X, Y>(xs: X, ys: Y, n: usize) -> Option<LinearFit>
where
    X: Iterator<Item = f64> + Clone,
    Y: Iterator<Item = f64> + Clone,
{
    if n < 2 {
        return None;
    }
    let mut distinct = xs.clone();
    let first = distinct.next()?;
    if distinct.all(|x| x == first) {
        return None;
    }
    let nf = n as f64;
    let x_mean = xs.clone().sum::<f64>() / nf;
    let y_mean = ys.clone().sum::<f64>() / nf;
    let (sxx, sxy) = xs.zip(ys).fold((0.0, 0.0), |(sxx, sxy), (x, y)| {
        let dx = x - x_mean;
        (sxx + dx * dx, sxy + dx * (y - y_mean))
    });
    let slope = sxy / sxx;
    Some(LinearFit {
        slope,
        intercept: y_mean - slope * x_mean,
    })
}

/// Per-feature speed fits plus the calibration policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    fits: Vec<(Feature, LinearFit)>,
    epsilon_speed: f64,
}

impl CalibrationModel {
    /// Statistics calibrated by default: everything except the mean speed,
    /// which would calibrate to the constant 1 and lose the speed signal.
    pub fn default_feature_set() -> Vec<Feature> {
        Feature::ALL
            .into_iter()
            .filter(|f| *f != Feature::SpeedMean)
            .collect()
    }

    /// Builds a model from explicit fits. Features must be unique.
    pub fn new(fits: Vec<(Feature, LinearFit)>, epsilon_speed: f64) -> Result<Self> {
        if !(epsilon_speed > 0.0 && epsilon_speed.is_finite()) {
            return Err(Error::InvalidParams(alloc::format!(
                "epsilon_speed must be positive, got {epsilon_speed}"
            )));
        }
        let mut seen = [false; FEATURE_COUNT];
        for (f, _) in &fits {
            if core::mem::replace(&mut seen[f.index()], true) {
                return Err(Error::InvalidParams(alloc::format!(
                    "feature {f} fitted twice"
                )));
            }
        }
        Ok(CalibrationModel {
            fits,
            epsilon_speed,
        })
    }

    /// Fits every feature in `features` on `events`. A feature whose speeds
    /// are all identical gets slope 0 and its mean as intercept, which makes
    /// [`calibrate`] fall back to the residual `y − b`.
    pub fn fit(
        events: &[Event],
        features: &[Feature],
        epsilon_speed: f64,
        warnings: &mut Vec<Warning>,
    ) -> Result<Self> {
        if events.len() < 2 {
            return Err(Error::TooFewEvents {
                needed: 2,
                got: events.len(),
            });
        }
        let mut fits = Vec::with_capacity(features.len());
        for &feature in features {
            let fit = match fit_speed_model(events, feature) {
                Ok(fit) => fit,
                Err(Error::DegenerateFit { feature: name }) => {
                    warnings.push(Warning::DegenerateFit { feature: name });
                    let mean = events.iter().map(|e| e.raw_value(feature)).sum::<f64>()
                        / events.len() as f64;
                    LinearFit {
                        slope: 0.0,
                        intercept: mean,
                    }
                }
                Err(e) => return Err(e),
            };
            fits.push((feature, fit));
        }
        CalibrationModel::new(fits, epsilon_speed)
    }

    pub fn fits(&self) -> &[(Feature, LinearFit)] {
        &self.fits
    }

    pub fn fit_for(&self, feature: Feature) -> Option<LinearFit> {
        self.fits
            .iter()
            .find(|(f, _)| *f == feature)
            .map(|(_, fit)| *fit)
    }

    pub fn epsilon_speed(&self) -> f64 {
        self.epsilon_speed
    }

    /// Calibrated value of `y` observed at mean speed `speed`.
    pub fn apply(&self, fit: LinearFit, y: f64, speed: f64) -> f64 {
        if fit.slope.abs() < MIN_SLOPE {
            y - fit.intercept
        } else {
            (y - fit.intercept) / (fit.slope * speed.max(self.epsilon_speed))
        }
    }
}

/// Fills `calibrated` on every event. Features not in the model are copied.
pub fn calibrate(events: &mut [Event], model: &CalibrationModel, warnings: &mut Vec<Warning>) {
    for (feature, fit) in model.fits() {
        if fit.slope.abs() < MIN_SLOPE {
            warnings.push(Warning::FlatSlope {
                feature: feature.name(),
                slope: fit.slope,
            });
        }
    }
    for event in events.iter_mut() {
        let speed = event.speed_mean();
        let mut out = event.raw;
        for &(feature, fit) in model.fits() {
            out[feature.index()] = model.apply(fit, event.raw[feature.index()], speed);
        }
        event.calibrated = Some(out);
    }
}
