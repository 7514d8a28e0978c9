//! Prim's algorithm on the implicit complete mutual-reachability graph.
//!
//! Edge weights are never materialized: each pass recomputes the distances
//! from the newly attached vertex, so extra memory is O(n). Edges are ordered
//! by `(weight, min endpoint, max endpoint)`, a strict total order, which makes
//! the tree unique and equal to the one Kruskal's algorithm picks under the
//! same order.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{mutual_reachability, Points};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    /// Smaller endpoint.
    pub a: usize,
    /// Larger endpoint.
    pub b: usize,
    pub weight: f64,
}

impl MstEdge {
    pub fn new(u: usize, v: usize, weight: f64) -> Self {
        MstEdge {
            a: u.min(v),
            b: u.max(v),
            weight,
        }
    }

    /// The total order used for every tie-break on edges.
    pub fn order(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Minimum spanning tree of the mutual-reachability graph over `points`.
///
/// Edges are returned in the order they join the tree.
pub fn build_mst(points: &Points, core: &[f64]) -> Result<Vec<MstEdge>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if core.len() != n {
        return Err(Error::InvalidParams(alloc::format!(
            "{} core distances for {n} points",
            core.len()
        )));
    }

    let mut in_tree = alloc::vec![false; n];
    // best known edge into the tree for each outside vertex
    let mut best: Vec<Option<MstEdge>> = alloc::vec![None; n];
    let mut edges = Vec::with_capacity(n - 1);

    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next: Option<(usize, MstEdge)> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let w = mutual_reachability(points.distance(current, v), core[current], core[v]);
            let candidate = MstEdge::new(current, v, w);
            let slot = &mut best[v];
            if slot.is_none_or(|e| candidate.order(&e) == Ordering::Less) {
                *slot = Some(candidate);
            }
            let edge = slot.expect("just set");
            if next.is_none_or(|(_, e)| edge.order(&e) == Ordering::Less) {
                next = Some((v, edge));
            }
        }
        let (v, edge) = next.expect("an outside vertex remains");
        in_tree[v] = true;
        edges.push(edge);
        current = v;
    }
    Ok(edges)
}
