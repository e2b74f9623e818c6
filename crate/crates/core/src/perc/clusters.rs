//! Cluster labeling with union-find.

use serde::{Deserialize, Serialize};

use super::BinaryConfig;
use crate::lattice::Window;

/// Union-find over `0..n` with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        assert!(n < u32::MAX as usize, "union-find limited to u32 indices");
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    #[inline]
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let g = self.parent[self.parent[x] as usize];
            self.parent[x] = g;
            x = g as usize;
        }
        x
    }

    /// Merges the classes of `a` and `b`; returns the new root.
    #[inline]
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        ra
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Size of the class of `x`.
    pub fn class_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

/// Offsets `(axis deltas)` of the `*`-neighbours in dimension `d`: all
/// non-zero vectors in `{-1,0,1}^d`.
fn star_offsets(d: usize) -> Vec<Vec<i8>> {
    let mut out = Vec::new();
    let total = 3usize.pow(d as u32);
    for code in 0..total {
        let mut c = code;
        let v: Vec<i8> = (0..d)
            .map(|_| {
                let r = (c % 3) as i8 - 1;
                c /= 3;
                r
            })
            .collect();
        if v.iter().any(|&x| x != 0) {
            out.push(v);
        }
    }
    out
}

/// Calls `f(j)` for each neighbour `j` of site `i` that lies in the window.
/// Nearest-neighbour mode visits only the `d` forward neighbours when
/// `forward_only` is set.
pub(crate) fn for_each_neighbor(
    w: &Window,
    i: usize,
    star: Option<&[Vec<i8>]>,
    forward_only: bool,
    mut f: impl FnMut(usize),
) {
    match star {
        None => {
            for axis in 0..w.dim() {
                if let Some(j) = w.step(i, axis, true) {
                    f(j);
                }
                if !forward_only {
                    if let Some(j) = w.step(i, axis, false) {
                        f(j);
                    }
                }
            }
        }
        Some(offsets) => {
            let ext = w.extents();
            let strides = w.strides();
            'o: for off in offsets {
                let mut j = i as isize;
                for (a, &o) in off.iter().enumerate() {
                    let c = (i / strides[a]) % ext[a];
                    if (o < 0 && c == 0) || (o > 0 && c + 1 == ext[a]) {
                        continue 'o;
                    }
                    j += o as isize * strides[a] as isize;
                }
                f(j as usize);
            }
        }
    }
}

/// Connected components of the open sites of a configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub window: Window,
    pub star: bool,
    /// Per site: the smallest dense index of its cluster, or `None` if closed.
    pub labels: Vec<Option<u32>>,
    /// `(label, size, touches the window boundary)`, sorted by label.
    pub clusters: Vec<(u32, usize, bool)>,
}

impl ClusterLabeling {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn size_of(&self, label: u32) -> Option<usize> {
        self.clusters.binary_search_by_key(&label, |c| c.0).ok().map(|k| self.clusters[k].1)
    }

    /// Sites of the cluster `label`, ascending.
    pub fn members(&self, label: u32) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(label))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn same_cluster(&self, a: usize, b: usize) -> bool {
        matches!((self.labels[a], self.labels[b]), (Some(x), Some(y)) if x == y)
    }
}

/// Labels the open clusters of `config` under nearest-neighbour or
/// `*`-adjacency.
pub fn label_clusters(config: &BinaryConfig, star: bool) -> ClusterLabeling {
    let w = &config.window;
    let n = w.len();
    let offsets = star.then(|| star_offsets(w.dim()));
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        if !config.bits[i] {
            continue;
        }
        for_each_neighbor(w, i, offsets.as_deref(), true, |j| {
            if j > i && config.bits[j] {
                uf.union(i, j);
            }
        });
    }
    // root -> smallest member; sites are visited in ascending order
    let mut root_label = vec![u32::MAX; n];
    let mut labels = vec![None; n];
    let mut clusters: Vec<(u32, usize, bool)> = Vec::new();
    let mut slot = vec![u32::MAX; n];
    for i in 0..n {
        if !config.bits[i] {
            continue;
        }
        let r = uf.find(i);
        if root_label[r] == u32::MAX {
            root_label[r] = i as u32;
            slot[r] = clusters.len() as u32;
            clusters.push((i as u32, 0, false));
        }
        labels[i] = Some(root_label[r]);
        let c = &mut clusters[slot[r] as usize];
        c.1 += 1;
        c.2 |= w.on_face(i);
    }
    ClusterLabeling { window: w.clone(), star, labels, clusters }
}
