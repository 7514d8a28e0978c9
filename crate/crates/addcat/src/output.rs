//! Result, debug and report files.

use std::io::{Read, Write};

use addcat_core::eval::EvalReport;
use addcat_core::hdbscan::CondensedTree;
use addcat_core::pipeline::{AddcatRun, DetectionResult, EventVerdict, Group, PipelineParams};
use addcat_core::{Event, Feature, FeatureVector, FEATURE_COUNT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("events file: {0}")]
    Events(String),
}

/// One row of the result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub speed_mean: f64,
    pub stage1_label: i32,
    pub group: Group,
    pub stage2_x: Option<i32>,
    pub stage2_y: Option<i32>,
    pub stage2_z: Option<i32>,
    pub is_anomaly: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_pothole: Option<bool>,
}

impl EventRecord {
    fn from_verdict(v: &EventVerdict, is_pothole: Option<bool>) -> Self {
        let axis = |i: usize| v.stage2.map(|s| s[i]);
        EventRecord {
            index: v.index,
            t_start: v.t_start,
            t_end: v.t_end,
            speed_mean: v.speed_mean,
            stage1_label: v.stage1_label,
            group: v.group,
            stage2_x: axis(0),
            stage2_y: axis(1),
            stage2_z: axis(2),
            is_anomaly: v.is_anomaly,
            is_pothole,
        }
    }

    fn to_verdict(&self) -> EventVerdict {
        let stage2 = match (self.stage2_x, self.stage2_y, self.stage2_z) {
            (Some(x), Some(y), Some(z)) => Some([x, y, z]),
            _ => None,
        };
        EventVerdict {
            index: self.index,
            t_start: self.t_start,
            t_end: self.t_end,
            speed_mean: self.speed_mean,
            stage1_label: self.stage1_label,
            group: self.group,
            stage2,
            is_anomaly: self.is_anomaly,
        }
    }
}

/// Shape of one clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: String,
    pub points: usize,
    pub dominant: Option<i32>,
    pub cluster_sizes: Vec<usize>,
    pub noise: usize,
    pub single_cluster_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub event_count: usize,
    pub anomaly_count: usize,
    pub normal_count: usize,
    pub params: PipelineParams,
    pub runs: Vec<RunSummary>,
    pub warnings: Vec<String>,
}

/// Contents of `result.json`. Holds no timing or host data, so identical
/// inputs give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub summary: Summary,
    pub events: Vec<EventRecord>,
}

impl ResultFile {
    pub fn from_run(run: &AddcatRun, params: &PipelineParams, with_truth: bool) -> Self {
        let mut runs = vec![run_summary("first", &run.first)];
        for (group, axis, r) in run.second.runs() {
            runs.push(run_summary(&format!("{group}/{axis}"), r));
        }
        let events = run
            .result
            .verdicts
            .iter()
            .zip(&run.events)
            .map(|(v, e)| EventRecord::from_verdict(v, with_truth.then_some(e.is_pothole)))
            .collect();
        ResultFile {
            summary: Summary {
                event_count: run.result.event_count(),
                anomaly_count: run.result.anomaly_count(),
                normal_count: run.result.normal_count(),
                params: params.clone(),
                runs,
                warnings: run.warnings.iter().map(ToString::to_string).collect(),
            },
            events,
        }
    }

    pub fn detection_result(&self) -> DetectionResult {
        DetectionResult {
            verdicts: self.events.iter().map(EventRecord::to_verdict).collect(),
        }
    }

    pub fn write<W: Write>(&self, sink: W) -> Result<(), OutputError> {
        write_json(sink, self)
    }

    pub fn read<R: Read>(source: R) -> Result<Self, OutputError> {
        Ok(serde_json::from_reader(source)?)
    }
}

fn run_summary(name: &str, run: &addcat_core::pipeline::ClusterRun) -> RunSummary {
    RunSummary {
        run: name.to_string(),
        points: run.members.len(),
        dominant: run.dominant,
        cluster_sizes: run.labeling.cluster_sizes.clone(),
        noise: run.labeling.noise_count(),
        single_cluster_fallback: run.used_single_cluster_fallback,
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut sink: W, value: &T) -> Result<(), OutputError> {
    serde_json::to_writer_pretty(&mut sink, value)?;
    sink.write_all(b"\n")?;
    Ok(())
}

const STAGES: [&str; 3] = ["raw", "cal", "z"];

fn events_header() -> Vec<String> {
    let mut header = vec![
        "index".to_string(),
        "t_start".into(),
        "t_end".into(),
        "is_pothole".into(),
    ];
    for stage in STAGES {
        header.extend(Feature::ALL.iter().map(|f| format!("{stage}_{}", f.name())));
    }
    header
}

/// One row per event: metadata, then the raw, calibrated and normalized
/// statistics in layout order. Missing vectors are left blank.
pub fn write_events<W: Write>(sink: W, events: &[Event]) -> Result<(), OutputError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(events_header())?;
    for e in events {
        let mut row = vec![
            e.index.to_string(),
            e.t_start.to_string(),
            e.t_end.to_string(),
            u8::from(e.is_pothole).to_string(),
        ];
        for vector in [Some(e.raw), e.calibrated, e.normalized] {
            match vector {
                Some(v) => row.extend(v.iter().map(ToString::to_string)),
                None => row.extend(std::iter::repeat_n(String::new(), FEATURE_COUNT)),
            }
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_events<R: Read>(source: R) -> Result<Vec<Event>, OutputError> {
    let mut reader = csv::Reader::from_reader(source);
    let expected = events_header();
    if reader
        .headers()?
        .iter()
        .ne(expected.iter().map(String::as_str))
    {
        return Err(OutputError::Events("unexpected header".into()));
    }
    let bad = |line: u64, what: &str| OutputError::Events(format!("line {line}: bad {what}"));
    let mut events = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|_| bad(line, &expected[i]))
        };
        let index = record[0].parse().map_err(|_| bad(line, "index"))?;
        let mut event = Event::new(index, num(1)?, num(2)?, [0.0; FEATURE_COUNT]);
        event.is_pothole = &record[3] == "1";
        let mut vectors: [Option<FeatureVector>; 3] = [None; 3];
        for (s, slot) in vectors.iter_mut().enumerate() {
            let base = 4 + s * FEATURE_COUNT;
            if record[base].is_empty() {
                continue;
            }
            let mut v = [0.0; FEATURE_COUNT];
            for (k, value) in v.iter_mut().enumerate() {
                *value = num(base + k)?;
            }
            *slot = Some(v);
        }
        let [raw, calibrated, normalized] = vectors;
        event.raw = raw.ok_or_else(|| bad(line, "raw statistics"))?;
        event.calibrated = calibrated;
        event.normalized = normalized;
        events.push(event);
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedTree<'a> {
    pub run: String,
    pub members: &'a [usize],
    pub tree: &'a CondensedTree,
}

/// Condensed trees of every run that had one. Point ids in a tree index
/// into that run's `members`.
pub fn write_trees<W: Write>(sink: W, run: &AddcatRun) -> Result<(), OutputError> {
    let mut trees = Vec::new();
    if let Some(tree) = &run.first.tree {
        trees.push(NamedTree {
            run: "first".into(),
            members: &run.first.members,
            tree,
        });
    }
    for (group, axis, r) in run.second.runs() {
        if let Some(tree) = &r.tree {
            trees.push(NamedTree {
                run: format!("{group}/{axis}"),
                members: &r.members,
                tree,
            });
        }
    }
    write_json(sink, &trees)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Flat `metric,value` table of a report.
pub fn write_report_csv<W: Write>(sink: W, report: &EvalReport) -> Result<(), OutputError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["metric", "value"])?;
    let c = &report.confusion;
    let mut rows: Vec<(String, String)> = vec![
        ("event_count".into(), report.event_count.to_string()),
        ("pothole_count".into(), report.pothole_count.to_string()),
        ("anomaly_count".into(), report.anomaly_count.to_string()),
        ("tp".into(), c.tp.to_string()),
        ("fp".into(), c.fp.to_string()),
        ("fn".into(), c.fn_.to_string()),
        ("tn".into(), c.tn.to_string()),
        ("accuracy".into(), report.accuracy.to_string()),
        ("precision".into(), fmt_opt(report.precision)),
        ("recall".into(), fmt_opt(report.recall)),
    ];
    for run in &report.cluster_speed_stats {
        for s in &run.clusters {
            let key = |m: &str| format!("speed/{}/{}/{m}", run.run, s.label);
            rows.push((key("count"), s.count.to_string()));
            rows.push((key("mean_mps"), s.mean_mps.to_string()));
            rows.push((key("mean_kph"), s.mean_kph.to_string()));
            rows.push((key("std_mps"), s.std_mps.to_string()));
            rows.push((key("std_kph"), s.std_kph.to_string()));
        }
    }
    for row in &report.tp_fn_comparison {
        rows.push((
            format!("tp_fn/{}/detected", row.name),
            fmt_opt(row.detected),
        ));
        rows.push((format!("tp_fn/{}/missed", row.name), fmt_opt(row.missed)));
    }
    for (k, v) in rows {
        writer.write_record([k, v])?;
    }
    writer.flush()?;
    Ok(())
}
