//! Subcommands and their exit codes.
//!
//! | code | meaning                                      |
//! |------|----------------------------------------------|
//! | 0    | success                                      |
//! | 1    | usage: bad flags, config, scenario or labels |
//! | 2    | I/O: unreadable, empty or malformed files    |
//! | 3    | pipeline failure, e.g. no dominant cluster   |

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use addcat_core::eval::EvalReport;
use addcat_core::pipeline::{run_addcat, AddcatRun};
use addcat_core::synth::{generate, DriveScenario};
use addcat_core::GroundTruth;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::ingest::{self, IngestError};
use crate::output::{self, OutputError, ResultFile};

pub const RESULT_FILE: &str = "result.json";
pub const CONFIG_ECHO_FILE: &str = "config.json";
pub const EVENTS_FILE: &str = "events.csv";
pub const TREES_FILE: &str = "trees.json";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_CSV_FILE: &str = "report.csv";
pub const TRIP_FILE: &str = "trip.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const SCENARIO_ECHO_FILE: &str = "scenario.json";

const LABELS_HINT: &str =
    "pass --labels <file> with `event_index,flag` or `t_start,t_end,flag` records";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: IngestError },
    #[error("{}: {source}", path.display())]
    Output { path: PathBuf, source: OutputError },
    #[error("pipeline failed: {0}")]
    Pipeline(addcat_core::Error),
    #[error("evaluation failed: {0}")]
    Evaluation(addcat_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::InvalidScenario(_) => 1,
            CliError::Io { .. } | CliError::Input { .. } | CliError::Output { .. } => 2,
            CliError::Pipeline(_) | CliError::Evaluation(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "addcat",
    version,
    about = "Driving anomaly detection by clustering sensor windows twice"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Window, calibrate, cluster and classify a trip.
    Detect(RunArgs),
    /// Score a previous `detect` output against pothole labels.
    Evaluate(RunArgs),
    /// `detect` followed by `evaluate`.
    Pipeline(RunArgs),
    /// Generate a synthetic trip and its ground truth.
    Synth(SynthArgs),
}

/// Flags override values from `--config`, which override the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trip CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Pothole labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output directory [default: addcat-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Samples per event [default: 10].
    #[arg(long)]
    pub window_size: Option<usize>,
    /// HDBSCAN minimum cluster size, all runs [default: 5].
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    /// HDBSCAN min_samples, all runs [default: min-cluster-size].
    #[arg(long)]
    pub min_samples: Option<usize>,
    /// Speed floor (m/s) in the calibration denominator [default: 0.5].
    #[arg(long)]
    pub epsilon_speed: Option<f64>,
    /// Write events.csv with every statistic.
    #[arg(long)]
    pub emit_events: bool,
    /// Write trees.json with every condensed tree.
    #[arg(long)]
    pub emit_trees: bool,
    /// Reject non-monotone timestamps instead of warning.
    #[arg(long)]
    pub strict: bool,
    /// Never retry a cluster-less run with the root as a cluster.
    #[arg(long)]
    pub no_single_cluster_fallback: bool,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.input {
            config.input = Some(v.clone());
        }
        if let Some(v) = &self.labels {
            config.labels = Some(v.clone());
        }
        if let Some(v) = &self.out {
            config.out = v.clone();
        }
        if let Some(v) = self.window_size {
            config.window_size = v;
        }
        if let Some(v) = self.min_cluster_size {
            config.min_cluster_size = v;
        }
        if let Some(v) = self.min_samples {
            config.min_samples = Some(v);
        }
        if let Some(v) = self.epsilon_speed {
            config.epsilon_speed = v;
        }
        config.emit.events |= self.emit_events;
        config.emit.trees |= self.emit_trees;
        config.strict |= self.strict;
        if self.no_single_cluster_fallback {
            config.single_cluster_fallback = false;
        }
        config.pipeline_params()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Scenario JSON [default: the built-in demo scenario].
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "addcat-synth")]
    pub out: PathBuf,
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(io_error(path))
}

fn write_with<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), OutputError>,
{
    let mut sink = create(path)?;
    write(&mut sink)
        .and_then(|()| sink.flush().map_err(OutputError::from))
        .map_err(|source| CliError::Output {
            path: path.to_path_buf(),
            source,
        })
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(io_error(path))
}

fn read_labels(path: &Path) -> Result<GroundTruth, CliError> {
    ingest::parse_ground_truth(open(path)?).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

fn required_labels(config: &RunConfig) -> Result<&Path, CliError> {
    config
        .labels
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("no labels given; {LABELS_HINT}")))
}

/// Everything one `detect` produced.
#[derive(Debug)]
pub struct Detection {
    pub run: AddcatRun,
    pub truth: Option<GroundTruth>,
    pub result: ResultFile,
}

pub fn cmd_detect(config: &RunConfig) -> Result<Detection, CliError> {
    let started = Instant::now();
    let input = config
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("no input given; pass --input <trip.csv>".into()))?;
    let params = config.pipeline_params()?;

    let trip = ingest::parse_trip(open(input)?, &config.columns, config.parse_options()).map_err(
        |source| CliError::Input {
            path: input.to_path_buf(),
            source,
        },
    )?;
    for w in &trip.warnings {
        warn!("{}: {w}", input.display());
    }
    info!("{} samples from {}", trip.samples.len(), input.display());

    let mut run = run_addcat(&trip.samples, &params).map_err(CliError::Pipeline)?;
    for w in &run.warnings {
        warn!("{w}");
    }
    let truth = match &config.labels {
        Some(path) => {
            let truth = read_labels(path)?;
            run.attach_truth(&truth);
            Some(truth)
        }
        None => None,
    };

    fs::create_dir_all(&config.out).map_err(io_error(&config.out))?;
    let result = ResultFile::from_run(&run, &params, truth.is_some());
    write_with(&config.out.join(RESULT_FILE), |w| result.write(w))?;
    write_with(&config.out.join(CONFIG_ECHO_FILE), |w| {
        output::write_json(w, config)
    })?;
    if config.emit.events {
        write_with(&config.out.join(EVENTS_FILE), |w| {
            output::write_events(w, &run.events)
        })?;
    }
    if config.emit.trees {
        write_with(&config.out.join(TREES_FILE), |w| {
            output::write_trees(w, &run)
        })?;
    }

    println!(
        "events: {}  anomalies: {}  normal: {}  ({:.3} s)",
        result.summary.event_count,
        result.summary.anomaly_count,
        result.summary.normal_count,
        started.elapsed().as_secs_f64()
    );
    Ok(Detection { run, truth, result })
}

fn write_report(config: &RunConfig, report: &EvalReport) -> Result<(), CliError> {
    if config.emit.report {
        write_with(&config.out.join(REPORT_JSON_FILE), |w| {
            output::write_json(w, report)
        })?;
        write_with(&config.out.join(REPORT_CSV_FILE), |w| {
            output::write_report_csv(w, report)
        })?;
    }
    let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "accuracy: {:.4}  precision: {}  recall: {}  (tp {} fp {} fn {} tn {})",
        report.accuracy,
        show(report.precision),
        show(report.recall),
        report.confusion.tp,
        report.confusion.fp,
        report.confusion.fn_,
        report.confusion.tn
    );
    Ok(())
}

/// Reads `result.json` (and `events.csv` when present) from the output
/// directory and scores it against the labels.
pub fn cmd_evaluate(config: &RunConfig) -> Result<EvalReport, CliError> {
    let labels = required_labels(config)?;
    let result_path = config.out.join(RESULT_FILE);
    let result = ResultFile::read(open(&result_path)?).map_err(|source| CliError::Output {
        path: result_path.clone(),
        source,
    })?;
    let events_path = config.out.join(EVENTS_FILE);
    let events = if events_path.exists() {
        let events =
            output::read_events(open(&events_path)?).map_err(|source| CliError::Output {
                path: events_path.clone(),
                source,
            })?;
        Some(events)
    } else {
        info!("no {EVENTS_FILE}; calibrated statistics unavailable");
        None
    };
    if events
        .as_ref()
        .is_some_and(|e| e.len() != result.events.len())
    {
        return Err(CliError::Usage(format!(
            "{} and {} disagree on the event count",
            result_path.display(),
            events_path.display()
        )));
    }

    let truth = read_labels(labels)?;
    let report = EvalReport::from_result(&result.detection_result(), &truth, events.as_deref())
        .map_err(CliError::Evaluation)?;
    write_report(config, &report)?;
    Ok(report)
}

pub fn cmd_pipeline(config: &RunConfig) -> Result<(Detection, EvalReport), CliError> {
    required_labels(config)?;
    let detection = cmd_detect(config)?;
    let truth = detection.truth.as_ref().expect("labels were given");
    let report = EvalReport::build(&detection.run, truth).map_err(CliError::Evaluation)?;
    write_report(config, &report)?;
    Ok((detection, report))
}

pub fn load_scenario(path: Option<&Path>) -> Result<DriveScenario, CliError> {
    let scenario = match path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_error(path))?;
            serde_json::from_str(&text).map_err(|e| CliError::InvalidScenario(e.to_string()))?
        }
        None => DriveScenario::demo(),
    };
    scenario
        .validate()
        .map_err(|e| CliError::InvalidScenario(e.to_string()))?;
    Ok(scenario)
}

/// Writes `trip.csv`, `truth.csv` and a scenario echo into `out`.
pub fn cmd_synth(scenario: Option<&Path>, out: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    let scenario = load_scenario(scenario)?;
    let drive = generate(&scenario).map_err(|e| CliError::InvalidScenario(e.to_string()))?;
    let truth = drive.pothole_truth();

    fs::create_dir_all(out).map_err(io_error(out))?;
    let trip_path = out.join(TRIP_FILE);
    let truth_path = out.join(TRUTH_FILE);
    let input_error = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Input { path, source }
    };
    let mut sink = create(&trip_path)?;
    ingest::write_trip(&mut sink, &drive.samples).map_err(input_error(&trip_path))?;
    sink.flush().map_err(io_error(&trip_path))?;
    let mut sink = create(&truth_path)?;
    ingest::write_ground_truth(&mut sink, &truth)
        .and_then(|()| sink.flush())
        .map_err(io_error(&truth_path))?;
    write_with(&out.join(SCENARIO_ECHO_FILE), |w| {
        output::write_json(w, &scenario)
    })?;

    println!(
        "samples: {}  potholes: {}  -> {}",
        drive.samples.len(),
        truth.positive_count(),
        out.display()
    );
    Ok((trip_path, truth_path))
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Detect(args) => cmd_detect(&args.resolve()?).map(drop),
        Command::Evaluate(args) => cmd_evaluate(&args.resolve()?).map(drop),
        Command::Pipeline(args) => cmd_pipeline(&args.resolve()?).map(drop),
        Command::Synth(args) => cmd_synth(args.scenario.as_deref(), &args.out).map(drop),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
