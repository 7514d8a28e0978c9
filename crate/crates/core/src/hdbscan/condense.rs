//! Condensation of a single-linkage dendrogram.
//!
//! The tree is walked top-down in density `λ = 1/distance`. Merges sharing the
//! exact same distance are treated as one multi-way split, so the result does
//! not depend on how tied edges happened to be ordered: at a split level the
//! components below it are collected, those smaller than `min_cluster_size`
//! shed their points from the current cluster, and if two or more components
//! are large enough each becomes a new cluster.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Dendrogram;

/// Distances at or below this map to the λ cap, so duplicates stay finite.
pub const MIN_DISTANCE: f64 = 1e-12;

pub fn lambda_of(distance: f64) -> f64 {
    if distance > MIN_DISTANCE {
        1.0 / distance
    } else {
        1.0 / MIN_DISTANCE
    }
}

/// `child` is a point id when below `n_points`, a cluster id otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedNode {
    pub parent: usize,
    pub child: usize,
    pub lambda: f64,
    pub child_size: usize,
}

/// Cluster ids start at `n_points` (the root) and are assigned so that a
/// child always has a larger id than its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    pub n_points: usize,
    pub nodes: Vec<CondensedNode>,
}

impl CondensedTree {
    pub fn root(&self) -> usize {
        self.n_points
    }

    pub fn cluster_count(&self) -> usize {
        1 + self
            .nodes
            .iter()
            .filter(|n| n.child >= self.n_points)
            .count()
    }

    pub fn point_exits(&self) -> impl Iterator<Item = &CondensedNode> {
        self.nodes.iter().filter(|n| n.child < self.n_points)
    }

    pub fn cluster_children(&self) -> impl Iterator<Item = &CondensedNode> {
        self.nodes.iter().filter(|n| n.child >= self.n_points)
    }
}

pub fn condense_tree(dendrogram: &Dendrogram, min_cluster_size: usize) -> CondensedTree {
    let n = dendrogram.n_points;
    let mut nodes = Vec::with_capacity(n + 2 * n / min_cluster_size.max(1));
    let root = n;
    if n == 0 {
        return CondensedTree { n_points: 0, nodes };
    }
    if dendrogram.merges.is_empty() {
        nodes.push(CondensedNode {
            parent: root,
            child: 0,
            lambda: lambda_of(0.0),
            child_size: 1,
        });
        return CondensedTree { n_points: n, nodes };
    }

    let mut next_cluster = root + 1;
    let mut frontier = Vec::new();
    let mut scratch = Vec::new();
    let mut work = alloc::vec![(dendrogram.top(), root)];
    while let Some((node, cluster)) = work.pop() {
        let distance = dendrogram.merges[node - n].distance;
        let lambda = lambda_of(distance);
        tie_frontier(dendrogram, node, &mut frontier, &mut scratch);

        let big = frontier
            .iter()
            .filter(|&&c| dendrogram.size_of(c) >= min_cluster_size)
            .count();
        for &component in &frontier {
            let size = dendrogram.size_of(component);
            if size < min_cluster_size {
                for_each_leaf(dendrogram, component, &mut scratch, |point| {
                    nodes.push(CondensedNode {
                        parent: cluster,
                        child: point,
                        lambda,
                        child_size: 1,
                    })
                });
            } else if big == 1 {
                work.push((component, cluster));
            } else {
                nodes.push(CondensedNode {
                    parent: cluster,
                    child: next_cluster,
                    lambda,
                    child_size: size,
                });
                work.push((component, next_cluster));
                next_cluster += 1;
            }
        }
    }
    CondensedTree { n_points: n, nodes }
}

/// Components directly below `node` once every merge at `node`'s distance is
/// undone. Order is left-to-right.
fn tie_frontier(d: &Dendrogram, node: usize, out: &mut Vec<usize>, stack: &mut Vec<usize>) {
    let n = d.n_points;
    let level = d.merges[node - n].distance;
    out.clear();
    stack.clear();
    stack.push(node);
    while let Some(x) = stack.pop() {
        if x >= n && (x == node || d.merges[x - n].distance == level) {
            let m = d.merges[x - n];
            stack.push(m.right);
            stack.push(m.left);
        } else {
            out.push(x);
        }
    }
}

fn for_each_leaf(d: &Dendrogram, node: usize, stack: &mut Vec<usize>, mut f: impl FnMut(usize)) {
    let n = d.n_points;
    stack.clear();
    stack.push(node);
    while let Some(x) = stack.pop() {
        if x < n {
            f(x);
        } else {
            let m = d.merges[x - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{single_linkage, MstEdge};
    use super::*;
    use alloc::vec;

    fn chain_dendrogram(weights: &[f64]) -> Dendrogram {
        let edges: Vec<_> = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| MstEdge::new(i, i + 1, w))
            .collect();
        single_linkage(&edges, weights.len() + 1).unwrap()
    }

    #[test]
    fn small_blob_only_root() {
        let d = chain_dendrogram(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let tree = condense_tree(&d, 5);
        assert_eq!(tree.cluster_count(), 1);
        assert_eq!(tree.point_exits().count(), 8);
        assert!(tree.nodes.iter().all(|n| n.parent == tree.root()));
    }

    #[test]
    fn two_groups_split_root() {
        // two chains of six joined by a long edge
        let mut w = vec![1.0; 11];
        w[5] = 100.0;
        let tree = condense_tree(&chain_dendrogram(&w), 5);
        let clusters: Vec<_> = tree.cluster_children().collect();
        assert_eq!(clusters.len(), 2);
        assert!(clusters.iter().all(|c| c.parent == tree.root()));
        assert!(clusters.iter().all(|c| c.child_size == 6));
        assert!(clusters.iter().all(|c| c.lambda == 0.01));
        assert_eq!(tree.point_exits().count(), 12);
    }

    #[test]
    fn tied_merges_split_together() {
        // A(6) - B(2) - C(6), both joins at distance 10: a three-way split
        let mut w = vec![1.0; 13];
        w[5] = 10.0;
        w[7] = 10.0;
        let tree = condense_tree(&chain_dendrogram(&w), 5);
        let clusters: Vec<_> = tree.cluster_children().collect();
        assert_eq!(clusters.len(), 2);
        let root_exits = tree
            .point_exits()
            .filter(|p| p.parent == tree.root())
            .count();
        assert_eq!(root_exits, 2);
    }

    #[test]
    fn zero_distance_is_capped() {
        let tree = condense_tree(&chain_dendrogram(&[0.0, 0.0, 0.0]), 2);
        assert!(tree.nodes.iter().all(|n| n.lambda == 1e12));
        assert_eq!(tree.point_exits().count(), 4);
    }

    #[test]
    fn lambdas_do_not_decrease_downwards() {
        let w = [3.0, 1.0, 1.5, 9.0, 0.5, 0.7, 2.0, 8.0, 0.1, 0.2, 0.3, 4.0];
        let tree = condense_tree(&chain_dendrogram(&w), 2);
        let mut birth = vec![0.0; tree.n_points + tree.cluster_count()];
        for node in &tree.nodes {
            assert!(node.lambda >= birth[node.parent]);
            if node.child >= tree.n_points {
                birth[node.child] = node.lambda;
            }
        }
    }
}
