//! Hierarchical density-based clustering (HDBSCAN), computed exactly.
//!
//! core distances → mutual reachability → minimum spanning tree →
//! single-linkage dendrogram → condensed tree → excess-of-mass extraction.
//!
//! The spanning tree is built with a dense O(n²) method and no spatial index,
//! which keeps it simple and exact up to a few tens of thousands of points.
//! Every tie is broken by smallest index, so output is bit-for-bit
//! reproducible.

mod condense;
mod core_distance;
mod extract;
mod linkage;
mod mst;
mod points;
mod union_find;

pub use self::condense::{condense_tree, lambda_of, CondensedNode, CondensedTree, MIN_DISTANCE};
pub use self::core_distance::{core_distances, mutual_reachability};
pub use self::extract::{extract_eom, stabilities};
pub use self::linkage::{single_linkage, Dendrogram, Merge};
pub use self::mst::{build_mst, MstEdge};
pub use self::points::{euclidean, Points};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Label of points outside every cluster.
pub const NOISE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    /// Neighbourhood size for core distances; the point itself counts.
    pub min_samples: usize,
    pub allow_single_cluster: bool,
}

impl HdbscanParams {
    /// `min_samples` defaults to `min_cluster_size`.
    pub fn new(min_cluster_size: usize) -> Self {
        HdbscanParams {
            min_cluster_size,
            min_samples: min_cluster_size,
            allow_single_cluster: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_cluster_size < 2 {
            return Err(Error::InvalidParams(alloc::format!(
                "min_cluster_size must be at least 2, got {}",
                self.min_cluster_size
            )));
        }
        if self.min_samples < 1 {
            return Err(Error::InvalidParams(
                "min_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for HdbscanParams {
    fn default() -> Self {
        HdbscanParams::new(5)
    }
}

/// Flat clustering. Labels are dense, numbered by decreasing cluster size
/// (ties by lowest member index); [`NOISE`] marks outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeling {
    pub labels: Vec<i32>,
    /// Indexed by label.
    pub cluster_sizes: Vec<usize>,
    /// Indexed by label.
    pub stabilities: Vec<f64>,
}

impl Labeling {
    pub fn all_noise(n: usize) -> Self {
        Labeling {
            labels: alloc::vec![NOISE; n],
            cluster_sizes: Vec::new(),
            stabilities: Vec::new(),
        }
    }

    /// Relabels an arbitrary cluster assignment into canonical order.
    pub(crate) fn from_assignment(
        assignment: &[Option<usize>],
        stability_of: impl Fn(usize) -> f64,
    ) -> Self {
        // (cluster key, size, first member)
        let mut found: Vec<(usize, usize, usize)> = Vec::new();
        for (point, key) in assignment.iter().enumerate() {
            let Some(key) = *key else { continue };
            match found.iter_mut().find(|f| f.0 == key) {
                Some(f) => f.1 += 1,
                None => found.push((key, 1, point)),
            }
        }
        found.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        let labels = assignment
            .iter()
            .map(|key| match key {
                Some(k) => found.iter().position(|f| f.0 == *k).expect("key recorded") as i32,
                None => NOISE,
            })
            .collect();
        Labeling {
            labels,
            cluster_sizes: found.iter().map(|f| f.1).collect(),
            stabilities: found.iter().map(|f| stability_of(f.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    /// Largest non-noise cluster, ties broken by lowest label.
    pub fn largest(&self) -> Option<i32> {
        self.cluster_sizes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(label, _)| label as i32)
    }

    /// Indices of points carrying `label`.
    pub fn members(&self, label: i32) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == label)
            .map(|(i, _)| i)
    }
}

/// Clustering plus the condensed tree it was extracted from.
#[derive(Debug, Clone, PartialEq)]
pub struct HdbscanOutput {
    pub labeling: Labeling,
    pub tree: CondensedTree,
}

pub fn hdbscan(points: &Points, params: &HdbscanParams) -> Result<Labeling> {
    hdbscan_with_tree(points, params).map(|out| out.labeling)
}

pub fn hdbscan_with_tree(points: &Points, params: &HdbscanParams) -> Result<HdbscanOutput> {
    params.validate()?;
    let n = points.len();
    let needed = params.min_samples.max(2);
    if n < needed {
        return Err(Error::TooFewPoints { needed, got: n });
    }
    let core = core_distances(points, params.min_samples)?;
    let mst = build_mst(points, &core)?;
    let dendrogram = single_linkage(&mst, n)?;
    let tree = condense_tree(&dendrogram, params.min_cluster_size);
    // the root may only form a cluster if it is big enough to be one
    let allow_root = params.allow_single_cluster && n >= params.min_cluster_size;
    let labeling = extract_eom(&tree, allow_root);
    Ok(HdbscanOutput { labeling, tree })
}
