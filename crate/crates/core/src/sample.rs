//! Raw sensor readings and pothole ground truth.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One sensor reading. Axes follow the vehicle frame: X forward, Y lateral,
/// Z vertical.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    /// Unix seconds.
    pub timestamp: f64,
    pub latitude: f64,
    pub longitude: f64,
    /// m/s
    pub speed: f64,
    /// m/s²
    pub gsen_x: f64,
    pub gsen_y: f64,
    pub gsen_z: f64,
    /// rad/s
    pub gyro_x: f64,
    pub gyro_y: f64,
    pub gyro_z: f64,
}

impl RawSample {
    pub fn gsen(&self) -> [f64; 3] {
        [self.gsen_x, self.gsen_y, self.gsen_z]
    }

    pub fn gyro(&self) -> [f64; 3] {
        [self.gyro_x, self.gyro_y, self.gyro_z]
    }

    /// Checks the per-sample invariants: finite channels and non-negative speed.
    pub fn validate(&self) -> core::result::Result<(), &'static str> {
        let channels = [
            self.timestamp,
            self.latitude,
            self.longitude,
            self.speed,
            self.gsen_x,
            self.gsen_y,
            self.gsen_z,
            self.gyro_x,
            self.gyro_y,
            self.gyro_z,
        ];
        if channels.iter().any(|v| !v.is_finite()) {
            return Err("non-finite value");
        }
        if self.speed < 0.0 {
            return Err("negative speed");
        }
        Ok(())
    }
}

/// A single ground-truth record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TruthEntry {
    /// Closed time range `[start, end]` in Unix seconds.
    Range {
        start: f64,
        end: f64,
        is_pothole: bool,
    },
    /// Event ordinal after windowing.
    Index { index: usize, is_pothole: bool },
}

/// Pothole labels, either as time ranges or as event indices.
///
/// Ranges are kept sorted by start and never overlap; indices are unique.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    entries: Vec<TruthEntry>,
}

impl GroundTruth {
    pub fn new(mut entries: Vec<TruthEntry>) -> Result<Self> {
        for e in &entries {
            if let TruthEntry::Range { start, end, .. } = *e {
                if !start.is_finite() || !end.is_finite() || end < start {
                    return Err(Error::InvalidGroundTruth(format!(
                        "bad range [{start}, {end}]"
                    )));
                }
            }
        }
        entries.sort_by(|a, b| match (a, b) {
            (TruthEntry::Index { index: x, .. }, TruthEntry::Index { index: y, .. }) => x.cmp(y),
            (TruthEntry::Index { .. }, TruthEntry::Range { .. }) => core::cmp::Ordering::Less,
            (TruthEntry::Range { .. }, TruthEntry::Index { .. }) => core::cmp::Ordering::Greater,
            (TruthEntry::Range { start: x, .. }, TruthEntry::Range { start: y, .. }) => {
                x.total_cmp(y)
            }
        });
        for pair in entries.windows(2) {
            match (pair[0], pair[1]) {
                (TruthEntry::Index { index: x, .. }, TruthEntry::Index { index: y, .. })
                    if x == y =>
                {
                    return Err(Error::InvalidGroundTruth(format!(
                        "duplicate event index {x}"
                    )));
                }
                (TruthEntry::Range { start, end, .. }, TruthEntry::Range { start: next, .. })
                    if next <= end =>
                {
                    return Err(Error::InvalidGroundTruth(format!(
                        "range [{start}, {end}] overlaps a range starting at {next}"
                    )));
                }
                _ => {}
            }
        }
        Ok(GroundTruth { entries })
    }

    pub fn entries(&self) -> &[TruthEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Number of pothole-positive entries.
    pub fn positive_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| match e {
                TruthEntry::Range { is_pothole, .. } | TruthEntry::Index { is_pothole, .. } => {
                    *is_pothole
                }
            })
            .count()
    }

    /// Whether an event is pothole-positive: any positive range intersects
    /// `[t_start, t_end]`, or its index is flagged.
    pub fn is_pothole(&self, index: usize, t_start: f64, t_end: f64) -> bool {
        let ranges_start = self
            .entries
            .partition_point(|e| matches!(e, TruthEntry::Index { .. }));
        let (indices, ranges) = self.entries.split_at(ranges_start);
        let flagged = indices
            .binary_search_by(|e| match e {
                TruthEntry::Index { index: i, .. } => i.cmp(&index),
                TruthEntry::Range { .. } => unreachable!(),
            })
            .is_ok_and(|pos| {
                matches!(
                    indices[pos],
                    TruthEntry::Index {
                        is_pothole: true,
                        ..
                    }
                )
            });
        if flagged {
            return true;
        }
        // ranges are sorted and disjoint, so their ends are sorted too
        let first = ranges.partition_point(|e| match e {
            TruthEntry::Range { end, .. } => *end < t_start,
            TruthEntry::Index { .. } => unreachable!(),
        });
        ranges[first..]
            .iter()
            .take_while(|e| matches!(e, TruthEntry::Range { start, .. } if *start <= t_end))
            .any(|e| {
                matches!(
                    e,
                    TruthEntry::Range {
                        is_pothole: true,
                        ..
                    }
                )
            })
    }

    /// Pothole flags for a sequence of `(index, t_start, t_end)` spans.
    pub fn flags<I>(&self, spans: I) -> Vec<bool>
    where
        I: IntoIterator<Item = (usize, f64, f64)>,
    {
        spans
            .into_iter()
            .map(|(i, s, e)| self.is_pothole(i, s, e))
            .collect()
    }
}
