use alloc::vec::Vec;

use super::{Event, Feature, FeatureVector, FEATURE_COUNT};
use crate::{stats, Error, RawSample, Result, Warning};

/// Ten samples, two seconds at 5 Hz.
pub const DEFAULT_WINDOW_SIZE: usize = 10;

/// Degrees of freedom removed from the per-window standard deviations.
pub(crate) const WINDOW_STD_DDOF: usize = 1;

/// Splits `samples` into consecutive non-overlapping windows and summarizes
/// each as an [`Event`]. A trailing partial window is discarded.
pub fn window(
    samples: &[RawSample],
    window_size: usize,
    warnings: &mut Vec<Warning>,
) -> Result<Vec<Event>> {
    if window_size < 2 {
        return Err(Error::WindowTooSmall(window_size));
    }
    if samples.len() < window_size {
        warnings.push(Warning::NotEnoughSamples {
            samples: samples.len(),
            window_size,
        });
        return Ok(Vec::new());
    }
    let leftover = samples.len() % window_size;
    if leftover > 0 {
        warnings.push(Warning::PartialWindowDropped { samples: leftover });
    }

    let mut channel = Vec::with_capacity(window_size);
    let events = samples
        .chunks_exact(window_size)
        .enumerate()
        .map(|(index, chunk)| {
            let raw = aggregate(chunk, &mut channel);
            Event::new(
                index,
                chunk[0].timestamp,
                chunk[chunk.len() - 1].timestamp,
                raw,
            )
        })
        .collect();
    Ok(events)
}

fn aggregate(chunk: &[RawSample], scratch: &mut Vec<f64>) -> FeatureVector {
    let mut out = [0.0; FEATURE_COUNT];

    let mut fill = |pick: &dyn Fn(&RawSample) -> f64| -> (f64, f64, f64, f64) {
        scratch.clear();
        scratch.extend(chunk.iter().map(pick));
        let (lo, hi) = stats::min_max(scratch).expect("window is non-empty");
        let std = stats::std_dev(scratch, WINDOW_STD_DDOF).expect("window has at least 2 samples");
        (stats::mean(scratch), std, lo, hi)
    };

    let (speed_mean, speed_std, _, _) = fill(&|s| s.speed);
    out[Feature::SpeedMean.index()] = speed_mean;
    out[Feature::SpeedStd.index()] = speed_std;

    const GSEN: [[Feature; 3]; 3] = [
        [Feature::GsenXMax, Feature::GsenXMin, Feature::GsenXStd],
        [Feature::GsenYMax, Feature::GsenYMin, Feature::GsenYStd],
        [Feature::GsenZMax, Feature::GsenZMin, Feature::GsenZStd],
    ];
    const GYRO: [[Feature; 3]; 3] = [
        [Feature::GyroXMax, Feature::GyroXMin, Feature::GyroXStd],
        [Feature::GyroYMax, Feature::GyroYMin, Feature::GyroYStd],
        [Feature::GyroZMax, Feature::GyroZMin, Feature::GyroZStd],
    ];
    for axis in 0..3 {
        let (_, std, lo, hi) = fill(&|s| s.gsen()[axis]);
        let [max_f, min_f, std_f] = GSEN[axis];
        out[max_f.index()] = hi;
        out[min_f.index()] = lo;
        out[std_f.index()] = std;

        let (_, std, lo, hi) = fill(&|s| s.gyro()[axis]);
        let [max_f, min_f, std_f] = GYRO[axis];
        out[max_f.index()] = hi;
        out[min_f.index()] = lo;
        out[std_f.index()] = std;
    }
    out
}
