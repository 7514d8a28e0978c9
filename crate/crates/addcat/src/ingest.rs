//! Trip CSV and ground-truth label files.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};

use addcat_core::{stats, GroundTruth, RawSample, TruthEntry, SAMPLE_RATE_HZ};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The ten channels a trip file must provide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Timestamp,
    Latitude,
    Longitude,
    Speed,
    GsenX,
    GsenY,
    GsenZ,
    GyroX,
    GyroY,
    GyroZ,
}

impl Role {
    pub const ALL: [Role; 10] = [
        Role::Timestamp,
        Role::Latitude,
        Role::Longitude,
        Role::Speed,
        Role::GsenX,
        Role::GsenY,
        Role::GsenZ,
        Role::GyroX,
        Role::GyroY,
        Role::GyroZ,
    ];

    /// Header written by [`write_trip`].
    pub fn header(self) -> &'static str {
        match self {
            Role::Timestamp => "timestamp",
            Role::Latitude => "latitude",
            Role::Longitude => "longitude",
            Role::Speed => "speed",
            Role::GsenX => "gsenX",
            Role::GsenY => "gsenY",
            Role::GsenZ => "gsenZ",
            Role::GyroX => "gyroX",
            Role::GyroY => "gyroY",
            Role::GyroZ => "gyroZ",
        }
    }

    fn default_aliases(self) -> &'static [&'static str] {
        match self {
            Role::Timestamp => &["timestamp", "time", "unixtimestamp", "ts"],
            Role::Latitude => &["latitude", "lat"],
            Role::Longitude => &["longitude", "lon", "lng", "long"],
            Role::Speed => &["speed", "speedmps", "vehiclespeed"],
            Role::GsenX => &["gsenx", "accx", "accelx", "accelerometerx"],
            Role::GsenY => &["gseny", "accy", "accely", "accelerometery"],
            Role::GsenZ => &["gsenz", "accz", "accelz", "accelerometerz"],
            Role::GyroX => &["gyrox", "gyroscopex"],
            Role::GyroY => &["gyroy", "gyroscopey"],
            Role::GyroZ => &["gyroz", "gyroscopez"],
        }
    }

    fn assign(self, sample: &mut RawSample, value: f64) {
        let slot = match self {
            Role::Timestamp => &mut sample.timestamp,
            Role::Latitude => &mut sample.latitude,
            Role::Longitude => &mut sample.longitude,
            Role::Speed => &mut sample.speed,
            Role::GsenX => &mut sample.gsen_x,
            Role::GsenY => &mut sample.gsen_y,
            Role::GsenZ => &mut sample.gsen_z,
            Role::GyroX => &mut sample.gyro_x,
            Role::GyroY => &mut sample.gyro_y,
            Role::GyroZ => &mut sample.gyro_z,
        };
        *slot = value;
    }

    fn value(self, s: &RawSample) -> f64 {
        match self {
            Role::Timestamp => s.timestamp,
            Role::Latitude => s.latitude,
            Role::Longitude => s.longitude,
            Role::Speed => s.speed,
            Role::GsenX => s.gsen_x,
            Role::GsenY => s.gsen_y,
            Role::GsenZ => s.gsen_z,
            Role::GyroX => s.gyro_x,
            Role::GyroY => s.gyro_y,
            Role::GyroZ => s.gyro_z,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.header())
    }
}

/// Lowercase with separators removed, so `gsen_X`, `gsenX` and `GSEN-X`
/// all compare equal.
fn normalize_header(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Which header names are accepted for each role. Explicit names take
/// precedence over the built-in aliases.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnMap {
    explicit: BTreeMap<Role, String>,
}

impl ColumnMap {
    pub fn with(mut self, role: Role, header: impl Into<String>) -> Self {
        self.explicit.insert(role, header.into());
        self
    }

    pub fn explicit(&self) -> &BTreeMap<Role, String> {
        &self.explicit
    }

    fn candidates(&self, role: Role) -> Vec<String> {
        match self.explicit.get(&role) {
            Some(name) => vec![normalize_header(name)],
            None => role
                .default_aliases()
                .iter()
                .map(|a| a.to_string())
                .collect(),
        }
    }

    /// Column index of every role in `headers`.
    fn resolve(&self, headers: &csv::StringRecord) -> Result<[usize; 10], IngestError> {
        let normalized: Vec<String> = headers.iter().map(normalize_header).collect();
        let mut out = [0; 10];
        for (slot, role) in out.iter_mut().zip(Role::ALL) {
            let candidates = self.candidates(role);
            *slot = candidates
                .iter()
                .find_map(|c| normalized.iter().position(|h| h == c))
                .ok_or_else(|| IngestError::MissingColumn {
                    role,
                    tried: candidates.join(", "),
                })?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    /// Reject non-monotone timestamps instead of warning.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TripWarning {
    /// Timestamp at `line` is earlier than the one before it.
    NonMonotoneTimestamp {
        line: u64,
        previous: f64,
        current: f64,
    },
    /// Median sample spacing far from the nominal 0.2 s.
    IrregularSampling { median_gap: f64 },
}

impl fmt::Display for TripWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TripWarning::NonMonotoneTimestamp {
                line,
                previous,
                current,
            } => write!(
                f,
                "line {line}: timestamp {current} is earlier than the previous {previous}"
            ),
            TripWarning::IrregularSampling { median_gap } => write!(
                f,
                "median sample gap is {median_gap:.4} s; expected {:.1} s (5 Hz)",
                1.0 / SAMPLE_RATE_HZ
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing required column for {role} (accepted headers: {tried})")]
    MissingColumn { role: Role, tried: String },
    #[error("line {line}, column {column}: {value:?} is not a number")]
    NotNumeric {
        line: u64,
        column: Role,
        value: String,
    },
    #[error("line {line}: {reason}")]
    InvalidSample { line: u64, reason: &'static str },
    #[error("line {line}: timestamp {current} is earlier than the previous {previous}")]
    NonMonotone {
        line: u64,
        previous: f64,
        current: f64,
    },
    #[error("no data rows")]
    NoDataRows,
    #[error("line {line}: {message}")]
    MalformedLabel { line: usize, message: String },
    #[error("ground truth: {0}")]
    GroundTruth(addcat_core::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub samples: Vec<RawSample>,
    pub warnings: Vec<TripWarning>,
}

/// Allowed relative deviation of the median gap from 1 / 5 Hz.
const GAP_TOLERANCE: f64 = 0.25;

pub fn parse_trip<R: Read>(
    source: R,
    columns: &ColumnMap,
    options: ParseOptions,
) -> Result<Trip, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let index = match reader.headers() {
        Ok(h) if h.is_empty() => return Err(IngestError::NoDataRows),
        Ok(h) => columns.resolve(&h.clone())?,
        Err(e) => return Err(e.into()),
    };

    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        let mut sample = RawSample::default();
        for (role, &col) in Role::ALL.iter().zip(&index) {
            let cell = record.get(col).unwrap_or("");
            let value: f64 = cell.parse().map_err(|_| IngestError::NotNumeric {
                line,
                column: *role,
                value: cell.to_string(),
            })?;
            role.assign(&mut sample, value);
        }
        sample
            .validate()
            .map_err(|reason| IngestError::InvalidSample { line, reason })?;
        if let Some(prev) = samples.last().map(|s: &RawSample| s.timestamp) {
            if sample.timestamp < prev {
                if options.strict {
                    return Err(IngestError::NonMonotone {
                        line,
                        previous: prev,
                        current: sample.timestamp,
                    });
                }
                warnings.push(TripWarning::NonMonotoneTimestamp {
                    line,
                    previous: prev,
                    current: sample.timestamp,
                });
            }
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(IngestError::NoDataRows);
    }

    let gaps: Vec<f64> = samples
        .windows(2)
        .map(|w| w[1].timestamp - w[0].timestamp)
        .collect();
    if let Some(median_gap) = stats::median(&gaps) {
        let nominal = 1.0 / SAMPLE_RATE_HZ;
        if (median_gap - nominal).abs() > GAP_TOLERANCE * nominal {
            warnings.push(TripWarning::IrregularSampling { median_gap });
        }
    }
    Ok(Trip { samples, warnings })
}

/// Writes samples with the canonical headers. Values use the shortest
/// representation that parses back to the same bits.
pub fn write_trip<W: Write>(sink: W, samples: &[RawSample]) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(Role::ALL.iter().map(|r| r.header()))?;
    for s in samples {
        writer.write_record(Role::ALL.iter().map(|r| r.value(s).to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

fn parse_flag(cell: &str) -> Option<bool> {
    match cell.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Reads `event_index,flag` and `t_start,t_end,flag` records. Blank lines
/// and `#` comments are skipped, as is a header on the first record line.
pub fn parse_ground_truth<R: Read>(source: R) -> Result<GroundTruth, IngestError> {
    let mut entries = Vec::new();
    let mut seen_record = false;
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        let first_record = !seen_record;
        seen_record = true;
        if first_record && fields[0].parse::<f64>().is_err() {
            continue;
        }
        let malformed = |message: String| IngestError::MalformedLabel {
            line: line_no,
            message,
        };
        let flag = |cell: &str| {
            parse_flag(cell).ok_or_else(|| malformed(format!("{cell:?} is not a flag")))
        };
        let entry = match fields.as_slice() {
            [index, is_pothole] => TruthEntry::Index {
                index: index
                    .parse()
                    .map_err(|_| malformed(format!("{index:?} is not an event index")))?,
                is_pothole: flag(is_pothole)?,
            },
            [start, end, is_pothole] => {
                let time = |cell: &str| {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|t| t.is_finite())
                        .ok_or_else(|| malformed(format!("{cell:?} is not a timestamp")))
                };
                TruthEntry::Range {
                    start: time(start)?,
                    end: time(end)?,
                    is_pothole: flag(is_pothole)?,
                }
            }
            _ => {
                return Err(malformed(format!(
                    "expected 2 or 3 fields, found {}",
                    fields.len()
                )))
            }
        };
        entries.push(entry);
    }
    GroundTruth::new(entries).map_err(IngestError::GroundTruth)
}

pub fn write_ground_truth<W: Write>(mut sink: W, truth: &GroundTruth) -> std::io::Result<()> {
    let entries = truth.entries();
    let ranges = entries
        .iter()
        .filter(|e| matches!(e, TruthEntry::Range { .. }))
        .count();
    if !entries.is_empty() && ranges == entries.len() {
        writeln!(sink, "t_start,t_end,is_pothole")?;
    } else if ranges == 0 && !entries.is_empty() {
        writeln!(sink, "event_index,is_pothole")?;
    }
    for entry in entries {
        match *entry {
            TruthEntry::Range {
                start,
                end,
                is_pothole,
            } => writeln!(sink, "{start},{end},{}", u8::from(is_pothole))?,
            TruthEntry::Index { index, is_pothole } => {
                writeln!(sink, "{index},{}", u8::from(is_pothole))?
            }
        }
    }
    Ok(())
}
