use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::union_find::UnionFind;
use super::MstEdge;
use crate::{Error, Result};

/// One agglomeration step. Nodes `0..n` are points; merge `i` creates node
/// `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_points: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn size_of(&self, node: usize) -> usize {
        if node < self.n_points {
            1
        } else {
            self.merges[node - self.n_points].size
        }
    }

    /// The node covering every point.
    pub fn top(&self) -> usize {
        self.n_points + self.merges.len() - 1
    }
}

/// Single-linkage dendrogram from a spanning tree over `n_points` points.
pub fn single_linkage(edges: &[MstEdge], n_points: usize) -> Result<Dendrogram> {
    if n_points < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: n_points,
        });
    }
    if edges.len() != n_points - 1 {
        return Err(Error::InvalidSpanningTree(alloc::format!(
            "{} edges for {n_points} points",
            edges.len()
        )));
    }
    let mut sorted = edges.to_vec();
    sorted.sort_by(MstEdge::order);

    let mut uf = UnionFind::new(n_points);
    // dendrogram node currently representing each union-find root
    let mut node_of: Vec<usize> = (0..n_points).collect();
    let mut merges = Vec::with_capacity(n_points - 1);
    for edge in sorted {
        if edge.b >= n_points {
            return Err(Error::InvalidSpanningTree(alloc::format!(
                "endpoint {} out of range",
                edge.b
            )));
        }
        let (ra, rb) = (uf.find(edge.a), uf.find(edge.b));
        let (na, nb) = (node_of[ra], node_of[rb]);
        let Some(root) = uf.union(ra, rb) else {
            return Err(Error::InvalidSpanningTree(alloc::format!(
                "edge ({}, {}) closes a cycle, so the tree is disconnected",
                edge.a,
                edge.b
            )));
        };
        node_of[root] = n_points + merges.len();
        merges.push(Merge {
            left: na.min(nb),
            right: na.max(nb),
            distance: edge.weight,
            size: uf.size_of(root),
        });
    }
    Ok(Dendrogram { n_points, merges })
}
