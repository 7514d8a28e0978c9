//! Two-stage clustering and the anomaly rule.
//!
//! Stage one clusters every event on all 20 normalized statistics. The
//! dominant cluster and the noise set are then clustered again, separately,
//! on three statistics per vehicle axis. An event is normal only if it sits
//! in the dominant cluster of all three per-axis runs of its group; events in
//! minor stage-one clusters never reach stage two and are anomalies.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::features::{self, CalibrationModel, DEFAULT_EPSILON_SPEED, DEFAULT_WINDOW_SIZE};
use crate::hdbscan::{self, CondensedTree, HdbscanParams, Labeling, Points, NOISE};
use crate::{Error, Event, Feature, GroundTruth, RawSample, Result, Stage, Warning};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three statistics clustered for one axis in stage two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisFeatureSet {
    pub axis: Axis,
    pub features: [Feature; 3],
}

impl AxisFeatureSet {
    pub const fn for_axis(axis: Axis) -> Self {
        let features = match axis {
            Axis::X => [Feature::GsenXStd, Feature::GyroXStd, Feature::GyroYStd],
            Axis::Y => [Feature::GsenYStd, Feature::GyroXStd, Feature::GyroZStd],
            Axis::Z => [Feature::GsenZStd, Feature::GyroXStd, Feature::GyroYStd],
        };
        AxisFeatureSet { axis, features }
    }
}

/// Where an event landed in stage one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    LargestCluster,
    Outliers,
    MinorCluster,
}

impl Group {
    pub const fn name(self) -> &'static str {
        match self {
            Group::LargestCluster => "largest_cluster",
            Group::Outliers => "outliers",
            Group::MinorCluster => "minor_cluster",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Clustering parameters for each of the seven runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageParams {
    pub first: HdbscanParams,
    /// Indexed by [`Axis::index`].
    pub largest: [HdbscanParams; 3],
    pub outliers: [HdbscanParams; 3],
}

impl StageParams {
    pub fn uniform(params: HdbscanParams) -> Self {
        StageParams {
            first: params,
            largest: [params; 3],
            outliers: [params; 3],
        }
    }

    /// Parameters of a second-stage run. `MinorCluster` has no run and maps
    /// to the first-stage parameters.
    pub fn second(&self, group: Group, axis: Axis) -> &HdbscanParams {
        match group {
            Group::LargestCluster => &self.largest[axis.index()],
            Group::Outliers => &self.outliers[axis.index()],
            Group::MinorCluster => &self.first,
        }
    }
}

impl Default for StageParams {
    fn default() -> Self {
        StageParams::uniform(HdbscanParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub window_size: usize,
    pub epsilon_speed: f64,
    pub calibrated_features: Vec<Feature>,
    pub clustering: StageParams,
    /// Retry a run that selects no cluster with the root allowed to form one.
    pub single_cluster_fallback: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            window_size: DEFAULT_WINDOW_SIZE,
            epsilon_speed: DEFAULT_EPSILON_SPEED,
            calibrated_features: CalibrationModel::default_feature_set(),
            clustering: StageParams::default(),
            single_cluster_fallback: true,
        }
    }
}

/// One HDBSCAN application over a subset of events.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun {
    /// Event indices, aligned with `labeling.labels`.
    pub members: Vec<usize>,
    pub labeling: Labeling,
    /// `None` when the group was too small to cluster.
    pub tree: Option<CondensedTree>,
    pub dominant: Option<i32>,
    pub used_single_cluster_fallback: bool,
}

impl ClusterRun {
    fn degenerate(members: Vec<usize>) -> Self {
        ClusterRun {
            labeling: Labeling::all_noise(members.len()),
            members,
            tree: None,
            dominant: None,
            used_single_cluster_fallback: false,
        }
    }
}

fn cluster_members(
    events: &[Event],
    members: Vec<usize>,
    features: &[Feature],
    params: &HdbscanParams,
    fallback: bool,
    run: &'static str,
    warnings: &mut Vec<Warning>,
) -> Result<ClusterRun> {
    let mut data = Vec::with_capacity(members.len() * features.len());
    for &i in &members {
        let z = events[i]
            .normalized
            .ok_or_else(|| Error::InvalidParams("events must be normalized first".into()))?;
        data.extend(features.iter().map(|f| z[f.index()]));
    }
    let points = Points::new(data, features.len())?;
    let mut out = hdbscan::hdbscan_with_tree(&points, params)?;
    let mut used_fallback = false;
    if out.labeling.cluster_count() == 0 && fallback && !params.allow_single_cluster {
        let single = HdbscanParams {
            allow_single_cluster: true,
            ..*params
        };
        out.labeling = hdbscan::extract_eom(
            &out.tree,
            single.allow_single_cluster && members.len() >= single.min_cluster_size,
        );
        used_fallback = true;
        warnings.push(Warning::SingleClusterFallback { run });
    }
    Ok(ClusterRun {
        dominant: out.labeling.largest(),
        members,
        labeling: out.labeling,
        tree: Some(out.tree),
        used_single_cluster_fallback: used_fallback,
    })
}

/// Clusters all events on the 20 normalized statistics.
pub fn first_stage(
    events: &[Event],
    params: &HdbscanParams,
    fallback: bool,
    warnings: &mut Vec<Warning>,
) -> Result<ClusterRun> {
    let run = cluster_members(
        events,
        (0..events.len()).collect(),
        &Feature::ALL,
        params,
        fallback,
        "first stage",
        warnings,
    )?;
    if run.dominant.is_none() {
        return Err(Error::NoDominantCluster);
    }
    Ok(run)
}

fn run_name(group: Group, axis: Axis) -> &'static str {
    match (group, axis) {
        (Group::LargestCluster, Axis::X) => "largest cluster, x axis",
        (Group::LargestCluster, Axis::Y) => "largest cluster, y axis",
        (Group::LargestCluster, Axis::Z) => "largest cluster, z axis",
        (Group::Outliers, Axis::X) => "outliers, x axis",
        (Group::Outliers, Axis::Y) => "outliers, y axis",
        (Group::Outliers, Axis::Z) => "outliers, z axis",
        (Group::MinorCluster, _) => "minor cluster",
    }
}

/// Clusters one stage-one group on the three statistics of `axis`.
pub fn second_stage(
    events: &[Event],
    members: Vec<usize>,
    group: Group,
    axis: AxisFeatureSet,
    params: &HdbscanParams,
    fallback: bool,
    warnings: &mut Vec<Warning>,
) -> Result<ClusterRun> {
    let size = members.len();
    if size == 0 {
        return Ok(ClusterRun::degenerate(members));
    }
    if size < params.min_cluster_size.max(params.min_samples).max(2) {
        warnings.push(Warning::GroupTooSmall {
            group,
            axis: axis.axis,
            size,
        });
        return Ok(ClusterRun::degenerate(members));
    }
    let run = cluster_members(
        events,
        members,
        &axis.features,
        params,
        fallback,
        run_name(group, axis.axis),
        warnings,
    )?;
    if run.dominant.is_none() {
        warnings.push(Warning::NoClusterInGroup {
            group,
            axis: axis.axis,
        });
    }
    Ok(run)
}

/// The six second-stage runs, indexed by [`Axis::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct SecondStage {
    pub largest: [ClusterRun; 3],
    pub outliers: [ClusterRun; 3],
}

impl SecondStage {
    pub fn get(&self, group: Group, axis: Axis) -> Option<&ClusterRun> {
        match group {
            Group::LargestCluster => Some(&self.largest[axis.index()]),
            Group::Outliers => Some(&self.outliers[axis.index()]),
            Group::MinorCluster => None,
        }
    }

    pub fn runs(&self) -> impl Iterator<Item = (Group, Axis, &ClusterRun)> {
        let largest = Axis::ALL
            .into_iter()
            .map(|a| (Group::LargestCluster, a, &self.largest[a.index()]));
        let outliers = Axis::ALL
            .into_iter()
            .map(|a| (Group::Outliers, a, &self.outliers[a.index()]));
        largest.chain(outliers)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventVerdict {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub speed_mean: f64,
    pub stage1_label: i32,
    pub group: Group,
    /// Per-axis second-stage labels, absent for minor-cluster events.
    pub stage2: Option<[i32; 3]>,
    pub is_anomaly: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub verdicts: Vec<EventVerdict>,
}

impl DetectionResult {
    pub fn event_count(&self) -> usize {
        self.verdicts.len()
    }

    pub fn anomaly_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_anomaly).count()
    }

    pub fn normal_count(&self) -> usize {
        self.event_count() - self.anomaly_count()
    }

    pub fn anomalies(&self) -> impl Iterator<Item = &EventVerdict> {
        self.verdicts.iter().filter(|v| v.is_anomaly)
    }
}

/// Applies the all-axes-dominant rule to the stage outputs.
pub fn classify(events: &[Event], first: &ClusterRun, second: &SecondStage) -> DetectionResult {
    let n = events.len();
    // position of each event within its group's run
    let mut slot = alloc::vec![usize::MAX; n];
    for group in [Group::LargestCluster, Group::Outliers] {
        let run = second.get(group, Axis::X).expect("group has runs");
        for (pos, &i) in run.members.iter().enumerate() {
            slot[i] = pos;
        }
    }

    let verdicts = events
        .iter()
        .enumerate()
        .map(|(i, event)| {
            let stage1_label = first.labeling.labels[i];
            let group = if Some(stage1_label) == first.dominant {
                Group::LargestCluster
            } else if stage1_label == NOISE {
                Group::Outliers
            } else {
                Group::MinorCluster
            };
            let (stage2, is_anomaly) = match group {
                Group::MinorCluster => (None, true),
                _ => {
                    let mut labels = [NOISE; 3];
                    let mut normal = true;
                    for axis in Axis::ALL {
                        let run = second.get(group, axis).expect("group has runs");
                        let label = run.labeling.labels[slot[i]];
                        labels[axis.index()] = label;
                        normal &= run.dominant == Some(label);
                    }
                    (Some(labels), !normal)
                }
            };
            EventVerdict {
                index: event.index,
                t_start: event.t_start,
                t_end: event.t_end,
                speed_mean: event.speed_mean(),
                stage1_label,
                group,
                stage2,
                is_anomaly,
            }
        })
        .collect();
    DetectionResult { verdicts }
}

/// Every intermediate of one end-to-end run.
#[derive(Debug, Clone, PartialEq)]
pub struct AddcatRun {
    pub events: Vec<Event>,
    pub calibration: CalibrationModel,
    pub first: ClusterRun,
    pub second: SecondStage,
    pub result: DetectionResult,
    pub warnings: Vec<Warning>,
}

impl AddcatRun {
    /// Marks pothole-positive events. Detection output is unaffected.
    pub fn attach_truth(&mut self, truth: &GroundTruth) {
        for e in &mut self.events {
            e.is_pothole = truth.is_pothole(e.index, e.t_start, e.t_end);
        }
    }

    pub fn pothole_flags(&self) -> Vec<bool> {
        self.events.iter().map(|e| e.is_pothole).collect()
    }
}

/// window → calibrate → normalize → stage one → stage two → classify.
pub fn run_addcat(samples: &[RawSample], params: &PipelineParams) -> Result<AddcatRun> {
    let mut warnings = Vec::new();
    let events = features::window(samples, params.window_size, &mut warnings)
        .map_err(|e| e.at(Stage::Windowing))?;
    if events.len() < 2 {
        return Err(Error::TooFewEvents {
            needed: 2,
            got: events.len(),
        }
        .at(Stage::Windowing));
    }
    detect_events(events, params, warnings)
}

/// Runs everything after windowing on pre-built events.
pub fn detect_events(
    mut events: Vec<Event>,
    params: &PipelineParams,
    mut warnings: Vec<Warning>,
) -> Result<AddcatRun> {
    let calibration = CalibrationModel::fit(
        &events,
        &params.calibrated_features,
        params.epsilon_speed,
        &mut warnings,
    )
    .map_err(|e| e.at(Stage::Calibration))?;
    features::calibrate(&mut events, &calibration, &mut warnings);
    features::zscore(&mut events, &mut warnings).map_err(|e| e.at(Stage::Normalization))?;

    let fallback = params.single_cluster_fallback;
    let first = first_stage(&events, &params.clustering.first, fallback, &mut warnings)
        .map_err(|e| e.at(Stage::FirstClustering))?;

    let dominant = first
        .dominant
        .expect("first stage guarantees a dominant cluster");
    let largest_members: Vec<usize> = first.labeling.members(dominant).collect();
    let outlier_members: Vec<usize> = first.labeling.members(NOISE).collect();

    let mut run = |group: Group, members: &Vec<usize>, axis: Axis| {
        second_stage(
            &events,
            members.clone(),
            group,
            AxisFeatureSet::for_axis(axis),
            params.clustering.second(group, axis),
            fallback,
            &mut warnings,
        )
        .map_err(|e| e.at(Stage::SecondClustering))
    };
    let largest = [
        run(Group::LargestCluster, &largest_members, Axis::X)?,
        run(Group::LargestCluster, &largest_members, Axis::Y)?,
        run(Group::LargestCluster, &largest_members, Axis::Z)?,
    ];
    let outliers = [
        run(Group::Outliers, &outlier_members, Axis::X)?,
        run(Group::Outliers, &outlier_members, Axis::Y)?,
        run(Group::Outliers, &outlier_members, Axis::Z)?,
    ];
    let second = SecondStage { largest, outliers };
    let result = classify(&events, &first, &second);

    Ok(AddcatRun {
        events,
        calibration,
        first,
        second,
        result,
        warnings,
    })
}
