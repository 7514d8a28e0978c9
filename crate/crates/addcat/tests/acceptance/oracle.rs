//! Deliberately naive HDBSCAN used as a reference.
//!
//! Works on the full mutual-reachability matrix. The hierarchy is read
//! directly off level sets: a cluster that is connected at level `w` splits
//! into the components of its points joined by edges strictly below `w`.
//! Equal-weight edges are therefore removed together.

const LAMBDA_CAP_DISTANCE: f64 = 1e-12;

fn lambda(distance: f64) -> f64 {
    1.0 / distance.max(LAMBDA_CAP_DISTANCE)
}

struct Cluster {
    birth: f64,
    children: Vec<usize>,
    /// (λ at which the points left, how many)
    exits: Vec<(f64, usize)>,
    points_leaving: Vec<usize>,
}

struct Oracle {
    mreach: Vec<Vec<f64>>,
    levels: Vec<f64>,
    min_cluster_size: usize,
    clusters: Vec<Cluster>,
}

impl Oracle {
    /// Components of `set` using only edges accepted by `keep`.
    fn components(&self, set: &[usize], keep: impl Fn(f64) -> bool) -> Vec<Vec<usize>> {
        let mut seen = vec![false; set.len()];
        let mut out = Vec::new();
        for start in 0..set.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![set[start]];
            let mut queue = vec![start];
            while let Some(a) = queue.pop() {
                for b in 0..set.len() {
                    if !seen[b] && keep(self.mreach[set[a]][set[b]]) {
                        seen[b] = true;
                        comp.push(set[b]);
                        queue.push(b);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Smallest level at which `set` is connected.
    fn join_level(&self, set: &[usize]) -> f64 {
        let (mut lo, mut hi) = (0, self.levels.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.components(set, |w| w <= self.levels[mid]).len() == 1 {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        self.levels[lo]
    }

    fn grow(&mut self, id: usize, mut set: Vec<usize>) {
        while set.len() > 1 {
            let level = self.join_level(&set);
            let l = lambda(level);
            let parts = self.components(&set, |w| w < level);
            let (big, small): (Vec<_>, Vec<_>) = parts
                .into_iter()
                .partition(|p| p.len() >= self.min_cluster_size);
            for part in small {
                self.clusters[id].exits.push((l, part.len()));
                self.clusters[id].points_leaving.extend(part);
            }
            match big.len() {
                0 => return,
                1 => set = big.into_iter().next().unwrap(),
                _ => {
                    for part in big {
                        let child = self.clusters.len();
                        self.clusters.push(Cluster {
                            birth: l,
                            children: Vec::new(),
                            exits: Vec::new(),
                            points_leaving: Vec::new(),
                        });
                        self.clusters[id].children.push(child);
                        self.clusters[id].exits.push((l, part.len()));
                        self.grow(child, part);
                    }
                    return;
                }
            }
        }
        if let Some(&p) = set.first() {
            // a lone point only remains when the whole input is one point
            self.clusters[id].exits.push((lambda(0.0), 1));
            self.clusters[id].points_leaving.push(p);
        }
    }

    fn stability(&self, id: usize) -> f64 {
        let c = &self.clusters[id];
        c.exits
            .iter()
            .map(|&(l, size)| (l - c.birth) * size as f64)
            .sum()
    }

    /// Best achievable total below and including `id`; records selections.
    fn select(&self, id: usize, root_eligible: bool, selected: &mut [bool]) -> f64 {
        let below: f64 = self.clusters[id]
            .children
            .clone()
            .into_iter()
            .map(|c| self.select(c, true, selected))
            .sum();
        let own = self.stability(id);
        if root_eligible && own > below {
            selected[id] = true;
            own
        } else {
            below
        }
    }

    fn assign(&self, id: usize, owner: Option<usize>, selected: &[bool], labels: &mut [i32]) {
        let owner = owner.or(selected[id].then_some(id));
        let label = owner.map_or(-1, |o| o as i32);
        for &p in &self.clusters[id].points_leaving {
            labels[p] = label;
        }
        for &c in &self.clusters[id].children {
            self.assign(c, owner, selected, labels);
        }
    }
}

/// Labels for `points`; cluster ids are arbitrary, noise is −1.
pub fn hdbscan(
    points: &[Vec<f64>],
    min_cluster_size: usize,
    min_samples: usize,
    allow_single_cluster: bool,
) -> Vec<i32> {
    let n = points.len();
    let dist: Vec<Vec<f64>> = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let core: Vec<f64> = dist
        .iter()
        .map(|row| {
            let mut sorted = row.clone();
            sorted.sort_by(f64::total_cmp);
            sorted[min_samples - 1]
        })
        .collect();
    let mreach: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| dist[i][j].max(core[i]).max(core[j]))
                .collect()
        })
        .collect();
    let mut levels: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| mreach[i][j])
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.is_empty() {
        levels.push(0.0);
    }

    let mut oracle = Oracle {
        mreach,
        levels,
        min_cluster_size,
        clusters: vec![Cluster {
            birth: 0.0,
            children: Vec::new(),
            exits: Vec::new(),
            points_leaving: Vec::new(),
        }],
    };
    oracle.grow(0, (0..n).collect());

    let mut selected = vec![false; oracle.clusters.len()];
    oracle.select(
        0,
        allow_single_cluster && n >= min_cluster_size,
        &mut selected,
    );
    let mut labels = vec![-1; n];
    oracle.assign(0, None, &selected, &mut labels);
    labels
}
