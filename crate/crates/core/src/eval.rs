//! Scoring detections against pothole ground truth.
//!
//! The positive class is "pothole flagged as anomaly". Pothole events that
//! were not flagged are false negatives (missed potholes).

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::hdbscan::Labeling;
use crate::pipeline::{AddcatRun, Axis, DetectionResult, Group};
use crate::{stats, Error, Event, Feature, GroundTruth, Result, KPH_PER_MPS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    /// Tallies `(flagged, is_pothole)` pairs.
    pub fn from_pairs<I: IntoIterator<Item = (bool, bool)>>(pairs: I) -> Self {
        let mut m = ConfusionMatrix::default();
        for (flagged, pothole) in pairs {
            match (flagged, pothole) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, true) => m.fn_ += 1,
                (false, false) => m.tn += 1,
            }
        }
        m
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Confusion matrix of `result` against `truth`, joined on event spans.
pub fn confusion(result: &DetectionResult, truth: &GroundTruth) -> Result<ConfusionMatrix> {
    if truth.is_empty() {
        return Err(Error::EvaluationUnavailable("no ground truth".into()));
    }
    if result.verdicts.is_empty() {
        return Err(Error::EvaluationUnavailable("no events".into()));
    }
    Ok(ConfusionMatrix::from_pairs(result.verdicts.iter().map(
        |v| (v.is_anomaly, truth.is_pothole(v.index, v.t_start, v.t_end)),
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedStats {
    pub label: i32,
    pub count: usize,
    pub mean_mps: f64,
    pub mean_kph: f64,
    /// Sample standard deviation; 0 when `degenerate`.
    pub std_mps: f64,
    pub std_kph: f64,
    /// Fewer than two events, so the standard deviation is undefined.
    pub degenerate: bool,
}

/// Per-label mean and sample std of `speeds`, aligned with `labeling`.
/// Labels are listed noise first, then in label order.
pub fn cluster_stats(labeling: &Labeling, speeds: &[f64]) -> Vec<SpeedStats> {
    label_speed_stats(&labeling.labels, speeds)
}

/// [`cluster_stats`] over a bare label array.
pub fn label_speed_stats(labels: &[i32], speeds: &[f64]) -> Vec<SpeedStats> {
    let mut distinct: Vec<i32> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    distinct
        .into_iter()
        .map(|label| {
            let values: Vec<f64> = labels
                .iter()
                .zip(speeds)
                .filter(|(&l, _)| l == label)
                .map(|(_, &s)| s)
                .collect();
            let mean = stats::mean(&values);
            let std = stats::std_dev(&values, 1);
            SpeedStats {
                label,
                count: values.len(),
                mean_mps: mean,
                mean_kph: mean * KPH_PER_MPS,
                std_mps: std.unwrap_or(0.0),
                std_kph: std.unwrap_or(0.0) * KPH_PER_MPS,
                degenerate: std.is_none(),
            }
        })
        .collect()
}

/// Mean of one statistic over detected and missed potholes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureComparison {
    pub name: String,
    /// Mean over true positives; `None` when there are none.
    pub detected: Option<f64>,
    /// Mean over false negatives; `None` when there are none.
    pub missed: Option<f64>,
}

/// Calibrated statistics compared between detected and missed potholes.
pub const COMPARED_FEATURES: [Feature; 5] = [
    Feature::GsenZStd,
    Feature::GsenZMax,
    Feature::GsenZMin,
    Feature::GyroXStd,
    Feature::GyroYStd,
];

/// Speed (km/h) and calibrated statistics averaged over
/// `{pothole ∧ flagged}` and `{pothole ∧ not flagged}`. `pothole` and, when
/// given, `events` must be aligned with `result.verdicts`; without events the
/// calibrated rows are unavailable.
pub fn tp_fn_comparison(
    result: &DetectionResult,
    pothole: &[bool],
    events: Option<&[Event]>,
) -> Vec<FeatureComparison> {
    let mut detected = Vec::new();
    let mut missed = Vec::new();
    for (i, (v, &p)) in result.verdicts.iter().zip(pothole).enumerate() {
        if p {
            if v.is_anomaly {
                detected.push(i);
            } else {
                missed.push(i);
            }
        }
    }
    let avg = |set: &[usize], f: &dyn Fn(usize) -> Option<f64>| -> Option<f64> {
        let values: Option<Vec<f64>> = set.iter().map(|&i| f(i)).collect();
        values.filter(|v| !v.is_empty()).map(|v| stats::mean(&v))
    };

    let mut rows = Vec::with_capacity(1 + COMPARED_FEATURES.len());
    let speed = |i: usize| Some(result.verdicts[i].speed_mean * KPH_PER_MPS);
    rows.push(FeatureComparison {
        name: "speed_kph".into(),
        detected: avg(&detected, &speed),
        missed: avg(&missed, &speed),
    });
    for feature in COMPARED_FEATURES {
        let pick = |i: usize| events?.get(i)?.calibrated.map(|c| c[feature.index()]);
        rows.push(FeatureComparison {
            name: alloc::format!("{}_c", feature.name()),
            detected: avg(&detected, &pick),
            missed: avg(&missed, &pick),
        });
    }
    rows
}

/// Speed statistics of one clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpeedStats {
    /// `"first"` or `"<group>/<axis>"`.
    pub run: String,
    pub clusters: Vec<SpeedStats>,
}

/// Speed statistics of the first run and of every second-stage run,
/// recovered from the per-event verdicts.
pub fn run_speed_stats(result: &DetectionResult) -> Vec<RunSpeedStats> {
    let verdicts = &result.verdicts;
    let labels: Vec<i32> = verdicts.iter().map(|v| v.stage1_label).collect();
    let speeds: Vec<f64> = verdicts.iter().map(|v| v.speed_mean).collect();
    let mut runs = Vec::with_capacity(7);
    runs.push(RunSpeedStats {
        run: "first".into(),
        clusters: label_speed_stats(&labels, &speeds),
    });
    for group in [Group::LargestCluster, Group::Outliers] {
        for axis in Axis::ALL {
            let (labels, speeds): (Vec<i32>, Vec<f64>) = verdicts
                .iter()
                .filter(|v| v.group == group)
                .filter_map(|v| Some((v.stage2?[axis.index()], v.speed_mean)))
                .unzip();
            runs.push(RunSpeedStats {
                run: alloc::format!("{group}/{axis}"),
                clusters: label_speed_stats(&labels, &speeds),
            });
        }
    }
    runs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub event_count: usize,
    pub pothole_count: usize,
    pub anomaly_count: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub cluster_speed_stats: Vec<RunSpeedStats>,
    pub tp_fn_comparison: Vec<FeatureComparison>,
}

impl EvalReport {
    /// Full report for a pipeline run.
    pub fn build(run: &AddcatRun, truth: &GroundTruth) -> Result<Self> {
        Self::from_result(&run.result, truth, Some(&run.events))
    }

    /// Report for a detection result; `events`, when given, supply the
    /// calibrated statistics of the TP/FN comparison.
    pub fn from_result(
        result: &DetectionResult,
        truth: &GroundTruth,
        events: Option<&[Event]>,
    ) -> Result<Self> {
        let confusion = confusion(result, truth)?;
        let pothole = truth.flags(
            result
                .verdicts
                .iter()
                .map(|v| (v.index, v.t_start, v.t_end)),
        );
        Ok(Self::assemble(
            confusion,
            run_speed_stats(result),
            tp_fn_comparison(result, &pothole, events),
        ))
    }

    pub fn assemble(
        confusion: ConfusionMatrix,
        cluster_speed_stats: Vec<RunSpeedStats>,
        tp_fn_comparison: Vec<FeatureComparison>,
    ) -> Self {
        EvalReport {
            event_count: confusion.total(),
            pothole_count: confusion.tp + confusion.fn_,
            anomaly_count: confusion.tp + confusion.fp,
            accuracy: confusion.accuracy().unwrap_or(0.0),
            precision: confusion.precision(),
            recall: confusion.recall(),
            confusion,
            cluster_speed_stats,
            tp_fn_comparison,
        }
    }
}
