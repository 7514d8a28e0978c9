//! Excess-of-mass selection of flat clusters from a condensed tree.

use alloc::vec::Vec;

use super::{CondensedTree, Labeling};

/// Stability of every condensed cluster, indexed by `cluster id − n_points`:
/// `Σ (λ_exit − λ_birth) · size` over everything leaving the cluster.
pub fn stabilities(tree: &CondensedTree) -> Vec<f64> {
    let n = tree.n_points;
    let m = tree.cluster_count();
    let mut birth = alloc::vec![0.0; m];
    for node in tree.cluster_children() {
        birth[node.child - n] = node.lambda;
    }
    let mut stability = alloc::vec![0.0; m];
    for node in &tree.nodes {
        let p = node.parent - n;
        stability[p] += (node.lambda - birth[p]) * node.child_size as f64;
    }
    stability
}

/// Selects clusters bottom-up: a cluster is kept when its stability exceeds
/// the best total its descendants can offer. The root only competes when
/// `allow_single_cluster` is set. Points outside every kept cluster are noise.
pub fn extract_eom(tree: &CondensedTree, allow_single_cluster: bool) -> Labeling {
    let n = tree.n_points;
    let m = tree.cluster_count();
    let stability = stabilities(tree);

    let mut parent_of = alloc::vec![0usize; m];
    let mut children: Vec<Vec<usize>> = alloc::vec![Vec::new(); m];
    for node in tree.cluster_children() {
        let (p, c) = (node.parent - n, node.child - n);
        parent_of[c] = p;
        children[p].push(c);
    }

    let lowest = if allow_single_cluster { 0 } else { 1 };
    let mut selected = alloc::vec![false; m];
    let mut best = alloc::vec![0.0; m];
    for c in (lowest..m).rev() {
        let below: f64 = children[c].iter().map(|&k| best[k]).sum();
        if stability[c] > below {
            selected[c] = true;
            best[c] = stability[c];
        } else {
            best[c] = below;
        }
    }

    // ids grow downwards, so a single forward pass resolves the outermost
    // selected ancestor of every cluster
    let mut owner: Vec<Option<usize>> = alloc::vec![None; m];
    for c in 0..m {
        let inherited = if c == 0 { None } else { owner[parent_of[c]] };
        owner[c] = inherited.or(selected[c].then_some(c));
    }

    let mut assignment: Vec<Option<usize>> = alloc::vec![None; n];
    for node in tree.point_exits() {
        assignment[node.child] = owner[node.parent - n];
    }
    Labeling::from_assignment(&assignment, |c| stability[c])
}
