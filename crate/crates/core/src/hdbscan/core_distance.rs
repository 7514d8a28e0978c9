use alloc::vec::Vec;

use super::Points;
use crate::{Error, Result};

/// Distance from each point to its `min_samples`-th nearest neighbour,
/// counting the point itself as the first.
pub fn core_distances(points: &Points, min_samples: usize) -> Result<Vec<f64>> {
    let n = points.len();
    if min_samples == 0 {
        return Err(Error::InvalidParams(
            "min_samples must be at least 1".into(),
        ));
    }
    if n < min_samples {
        return Err(Error::TooFewPoints {
            needed: min_samples,
            got: n,
        });
    }
    if min_samples == 1 {
        return Ok(alloc::vec![0.0; n]);
    }
    let kth = min_samples - 2;
    let mut others = Vec::with_capacity(n - 1);
    let core = (0..n)
        .map(|i| {
            others.clear();
            others.extend((0..n).filter(|&j| j != i).map(|j| points.distance(i, j)));
            *others.select_nth_unstable_by(kth, f64::total_cmp).1
        })
        .collect();
    Ok(core)
}

/// `max(core_a, core_b, distance)`.
#[inline]
pub fn mutual_reachability(distance: f64, core_a: f64, core_b: f64) -> f64 {
    distance.max(core_a).max(core_b)
}
