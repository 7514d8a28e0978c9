use alloc::vec::Vec;

use super::{Event, Feature, FEATURE_COUNT};
use crate::{Error, Result, Warning};

/// Fills `normalized` with per-column z-scores of the calibrated statistics
/// (raw statistics when an event has not been calibrated). Columns use the
/// population standard deviation; a constant column becomes all zeros.
pub fn zscore(events: &mut [Event], warnings: &mut Vec<Warning>) -> Result<()> {
    if events.len() < 2 {
        return Err(Error::TooFewEvents {
            needed: 2,
            got: events.len(),
        });
    }
    let n = events.len() as f64;
    let source = |e: &Event| e.calibrated.unwrap_or(e.raw);

    let mut out: Vec<[f64; FEATURE_COUNT]> = events.iter().map(|_| [0.0; FEATURE_COUNT]).collect();
    for feature in Feature::ALL {
        let col = feature.index();
        let first = source(&events[0])[col];
        if events.iter().all(|e| source(e)[col] == first) {
            warnings.push(Warning::ConstantColumn {
                feature: feature.name(),
            });
            continue;
        }
        let mean = events.iter().map(|e| source(e)[col]).sum::<f64>() / n;
        let var = events
            .iter()
            .map(|e| {
                let d = source(e)[col] - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        let std = libm::sqrt(var);
        for (row, e) in out.iter_mut().zip(events.iter()) {
            row[col] = (source(e)[col] - mean) / std;
        }
    }
    for (e, row) in events.iter_mut().zip(out) {
        e.normalized = Some(row);
    }
    Ok(())
}
