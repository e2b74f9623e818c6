//! Good and bad blocks in the slab `Z^2 × [0, 2L_0)` and circuits of bad
//! blocks around the origin.
//!
//! A block anchored at `x ∈ L_0 Z^2` is the cube `x + [0, 2L_0)^3`. It is good
//! at level `h` when the largest open cluster of `{ψ ≥ 2h}` in the cube
//! crosses it in the first two directions and is the only cluster of
//! diameter at least `L_0 - 1` (event `F`), and when `ξ ≥ -h` on the whole
//! cube (event `G`).

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clusters::label_clusters;
use super::BinaryConfig;
use crate::error::{Error, Result};
use crate::field::DecompositionSampler;
use crate::greens::GreenTable;
use crate::lattice::{LatticeBox, Point, Window};
use crate::rng::{experiment, standard_normals, StreamKey};
use crate::stats::McEstimate;

/// `ψ` and `ξ` on a box of `Z^3`, row-major.
#[derive(Clone, Debug)]
pub struct SlabSample {
    pub window: Window,
    pub psi: Vec<f64>,
    pub xi: Vec<f64>,
}

impl SlabSample {
    pub fn new(window: Window, psi: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if window.dim() != 3 || psi.len() != window.len() || xi.len() != window.len() {
            return Err(Error::Geometry("slab sample needs a 3-dimensional window and matching values".into()));
        }
        Ok(SlabSample { window, psi, xi })
    }

    /// From a decomposition sample whose points enumerate `window` in
    /// row-major order.
    pub fn from_decomposition(window: Window, s: &crate::field::DecompositionSample) -> Result<Self> {
        let ok = s.points.len() == window.len() && s.points.iter().enumerate().all(|(i, p)| window.index(p) == Some(i));
        if !ok {
            return Err(Error::Geometry("decomposition points do not enumerate the window".into()));
        }
        Self::new(window, s.psi.clone(), s.xi.clone())
    }
}

fn block_box(anchor: &Point, l0: u64) -> Result<LatticeBox> {
    if anchor.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: anchor.dim() });
    }
    Ok(LatticeBox::attached(anchor, 2 * l0))
}

/// Event `F` for an open/closed configuration on one block cube.
pub fn crossing_cluster_event(config: &BinaryConfig, l0: u64) -> bool {
    let lab = label_clusters(config, false);
    let Some(&(best, _, _)) = lab.clusters.iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))) else {
        return false;
    };
    let w = &config.window;
    let d = w.dim();
    let mut bounds: HashMap<u32, (Vec<usize>, Vec<usize>)> = HashMap::new();
    let mut loc = vec![0usize; d];
    for (i, l) in lab.labels.iter().enumerate() {
        if let Some(l) = l {
            w.local_coords(i, &mut loc);
            let e = bounds.entry(*l).or_insert_with(|| (loc.clone(), loc.clone()));
            for a in 0..d {
                e.0[a] = e.0[a].min(loc[a]);
                e.1[a] = e.1[a].max(loc[a]);
            }
        }
    }
    let (lo, hi) = &bounds[&best];
    let side = w.extents();
    let crosses = (0..2).all(|a| lo[a] == 0 && hi[a] + 1 == side[a]);
    let big = |b: &(Vec<usize>, Vec<usize>)| (0..d).map(|a| b.1[a] - b.0[a]).max().unwrap() as u64 + 1 >= l0;
    let unique = bounds.iter().all(|(l, b)| *l == best || !big(b));
    crosses && unique
}

/// `(F, G)` for the block anchored at `anchor` at level `h`: `F` is read
/// from `{ψ ≥ 2h}`, `G` from `min ξ ≥ -h`.
pub fn block_events(sample: &SlabSample, l0: u64, h: f64, anchor: &Point) -> Result<(bool, bool)> {
    let bx = block_box(anchor, l0)?;
    let idx = sample.window.indices_of_box(&bx)?;
    let config = BinaryConfig {
        window: Window::new(bx),
        bits: idx.iter().map(|&i| sample.psi[i] >= 2.0 * h).collect(),
        level: 2.0 * h,
    };
    let f = crossing_cluster_event(&config, l0);
    let g = idx.iter().all(|&i| sample.xi[i] >= -h);
    Ok((f, g))
}

/// How blocks are declared bad.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockSource {
    /// `ψ^0` iid with variance `1/2` and `ξ` with covariance `G'` for
    /// dimension `d`, at level `h0`.
    Field { d: usize, h0: f64, l0: u64 },
    /// Each block independently bad with probability `q`.
    Planted { q: f64 },
    /// Every block bad (`true`) or good.
    Forced { bad: bool },
}

fn centre(m: usize) -> usize {
    (m - 2) / 2
}

fn in_centre(m: usize, a: usize, b: usize) -> bool {
    let c = centre(m);
    (c..c + 2).contains(&a) && (c..c + 2).contains(&b)
}

/// Whether the central `2 × 2` blocks of an `m × m` grid are enclosed by a
/// `*`-circuit of bad blocks, i.e. the good blocks nearest-neighbour
/// connected to the centre never reach the outer ring.
pub fn surrounded(bad: &[bool], m: usize) -> bool {
    let on_frame = |a: usize, b: usize| a == 0 || b == 0 || a + 1 == m || b + 1 == m;
    let mut seen = vec![false; m * m];
    let mut q = VecDeque::new();
    for a in 0..m {
        for b in 0..m {
            if in_centre(m, a, b) {
                seen[a * m + b] = true;
                q.push_back((a, b));
            }
        }
    }
    while let Some((a, b)) = q.pop_front() {
        if on_frame(a, b) {
            return false;
        }
        for (da, db) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (na, nb) = (a as i64 + da, b as i64 + db);
            if na < 0 || nb < 0 || na >= m as i64 || nb >= m as i64 {
                continue;
            }
            let k = na as usize * m + nb as usize;
            if !seen[k] && !bad[k] {
                seen[k] = true;
                q.push_back((na as usize, nb as usize));
            }
        }
    }
    true
}

/// Exact probability of [`surrounded`] when blocks are bad independently
/// with probability `q`: the sum over sets `S` of interior blocks connected
/// to the centre of `(1-q)^{|S|} q^{|∂(S ∪ C)|}`.
pub fn exact_surround_probability(m: usize, q: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidArgument("grid side must be at least 2".into()));
    }
    let free: Vec<(usize, usize)> = (1..m.saturating_sub(1))
        .flat_map(|a| (1..m - 1).map(move |b| (a, b)))
        .filter(|&(a, b)| !in_centre(m, a, b))
        .collect();
    if free.len() > 24 {
        return Err(Error::EnumerationCap(format!("{} free blocks; enumeration capped at 24", free.len())));
    }
    let mut total = 0.0;
    let mut member = vec![false; m * m];
    for mask in 0u32..(1u32 << free.len()) {
        for a in 0..m {
            for b in 0..m {
                member[a * m + b] = in_centre(m, a, b);
            }
        }
        for (k, &(a, b)) in free.iter().enumerate() {
            if mask >> k & 1 == 1 {
                member[a * m + b] = true;
            }
        }
        // S ∪ C must be connected from C
        let bad: Vec<bool> = member.iter().map(|x| !x).collect();
        let mut seen = vec![false; m * m];
        let mut q2: VecDeque<usize> = (0..m * m).filter(|&k| in_centre(m, k / m, k % m)).collect();
        for &k in &q2 {
            seen[k] = true;
        }
        let mut reached = 0;
        let mut boundary = 0;
        while let Some(k) = q2.pop_front() {
            reached += 1;
            let (a, b) = (k / m, k % m);
            for (da, db) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (na, nb) = (a as i64 + da, b as i64 + db);
                if na < 0 || nb < 0 || na >= m as i64 || nb >= m as i64 {
                    continue;
                }
                let j = na as usize * m + nb as usize;
                if !seen[j] {
                    seen[j] = true;
                    if bad[j] {
                        boundary += 1;
                    } else {
                        q2.push_back(j);
                    }
                }
            }
        }
        let size = mask.count_ones() as usize;
        if reached != size + 4 {
            continue;
        }
        total += (1.0 - q).powi(size as i32) * q.powi(boundary);
    }
    Ok(total)
}

/// Region covering the blocks of an `m × m` anchor grid.
fn slab_region(m: usize, l0: u64) -> LatticeBox {
    let side = (m as i64 + 1) * l0 as i64 - 1;
    LatticeBox::new(Point::origin(3), Point::new(vec![side, side, 2 * l0 as i64 - 1])).unwrap()
}

/// Frequency with which the central `2 × 2` blocks of an `m × m` grid are
/// enclosed by a `*`-circuit of bad blocks.
pub fn bad_circuit_probe(source: &BlockSource, m: usize, n: u64, seed: u64) -> Result<McEstimate> {
    if !(2..=8).contains(&m) {
        return Err(Error::InvalidArgument("grid side must lie in 2..=8".into()));
    }
    let key = StreamKey::new(seed, experiment::BLOCKS).child(m as u64);
    let grids: Vec<Vec<bool>> = match source {
        BlockSource::Forced { bad } => vec![vec![*bad; m * m]; n as usize],
        BlockSource::Planted { q } => (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = key.stream(i);
                (0..m * m).map(|_| rng.random::<f64>() < *q).collect()
            })
            .collect(),
        BlockSource::Field { d, h0, l0 } => {
            if *h0 <= 0.0 || *l0 == 0 {
                return Err(Error::InvalidArgument("h0 and L0 must be positive".into()));
            }
            let region = slab_region(m, *l0);
            let w = Window::new(region.clone());
            if w.len() > crate::field::decomposition::DECOMPOSITION_MAX {
                return Err(Error::InvalidArgument(format!("slab region of {} sites exceeds the dense cap", w.len())));
            }
            let pts: Vec<Point> = region.points().collect();
            let table = GreenTable::new(*d, 1e-11)?;
            let sampler = DecompositionSampler::new(*d, &pts, &table)?;
            let sd = 0.5f64.sqrt();
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut rng = key.stream(i);
                    let psi = standard_normals(&mut rng, w.len()).into_iter().map(|z| sd * z).collect();
                    let xi = sampler.xi_with(&mut rng);
                    let s = SlabSample::new(w.clone(), psi, xi)?;
                    let mut bad = Vec::with_capacity(m * m);
                    for a in 0..m {
                        for b in 0..m {
                            let x = Point::new(vec![(a as u64 * l0) as i64, (b as u64 * l0) as i64, 0]);
                            let (f, g) = block_events(&s, *l0, *h0, &x)?;
                            bad.push(!(f && g));
                        }
                    }
                    Ok(bad)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let hits = grids.iter().filter(|g| surrounded(g, m)).count() as u64;
    let bad_blocks: usize = grids.iter().map(|g| g.iter().filter(|b| **b).count()).sum();
    let bad_fraction = bad_blocks as f64 / (grids.len().max(1) * m * m) as f64;
    Ok(McEstimate::bernoulli(hits, n, seed).with_meta("grid", m).with_meta("bad_fraction", bad_fraction))
}

/// Frequencies of `ψ⁰_0 ≥ 2h0` and of the event `F` at level `2h0` on one
/// block, for `ψ⁰` iid with variance `1/2`.
pub fn psi_block_probability(h0: f64, l0: u64, n: u64, seed: u64) -> Result<(McEstimate, McEstimate)> {
    if h0 <= 0.0 || l0 == 0 || n == 0 {
        return Err(Error::InvalidArgument("need h0 > 0, L0 ≥ 1 and n ≥ 1".into()));
    }
    let key = StreamKey::new(seed, experiment::BLOCKS).child(0x5053_4930 + l0);
    let w = Window::new(LatticeBox::attached(&Point::origin(3), 2 * l0));
    let sd = 0.5f64.sqrt();
    let outcomes: Vec<(bool, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.stream(i);
            let psi: Vec<f64> = standard_normals(&mut rng, w.len()).into_iter().map(|z| sd * z).collect();
            let config = BinaryConfig {
                window: w.clone(),
                bits: psi.iter().map(|&v| v >= 2.0 * h0).collect(),
                level: 2.0 * h0,
            };
            (config.bits[0], crossing_cluster_event(&config, l0))
        })
        .collect();
    let site = outcomes.iter().filter(|o| o.0).count() as u64;
    let good = outcomes.iter().filter(|o| o.1).count() as u64;
    Ok((
        McEstimate::bernoulli(site, n, seed).with_meta("h0", h0),
        McEstimate::bernoulli(good, n, seed).with_meta("h0", h0).with_meta("L0", l0),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slab(l0: u64, psi: f64, xi: f64) -> SlabSample {
        let w = Window::new(LatticeBox::attached(&Point::origin(3), 2 * l0));
        let n = w.len();
        SlabSample::new(w, vec![psi; n], vec![xi; n]).unwrap()
    }

    #[test]
    fn all_open_block_is_good() {
        let s = slab(3, f64::INFINITY, 0.0);
        assert_eq!(block_events(&s, 3, 0.5, &Point::origin(3)).unwrap(), (true, true));
    }

    #[test]
    fn one_low_xi_site_breaks_g() {
        let mut s = slab(2, 1.0, 0.0);
        s.xi[5] = -(0.5 + 1.0);
        assert!(!block_events(&s, 2, 0.5, &Point::origin(3)).unwrap().1);
    }

    #[test]
    fn second_large_cluster_breaks_f() {
        // two parallel open planes x3 = 0 and x3 = 2, separated by a closed plane
        let l0 = 2;
        let mut s = slab(l0, -1.0, 0.0);
        for p in s.window.bounds().points().collect::<Vec<_>>() {
            if p[2] == 0 || p[2] == 2 {
                let i = s.window.index(&p).unwrap();
                s.psi[i] = 5.0;
            }
        }
        assert!(!block_events(&s, l0, 0.5, &Point::origin(3)).unwrap().0);
        // only one plane open
        for p in s.window.bounds().points().collect::<Vec<_>>() {
            if p[2] == 2 {
                let i = s.window.index(&p).unwrap();
                s.psi[i] = -1.0;
            }
        }
        assert!(block_events(&s, l0, 0.5, &Point::origin(3)).unwrap().0);
    }

    #[test]
    fn forced_grids() {
        let good = bad_circuit_probe(&BlockSource::Forced { bad: false }, 6, 10, 0).unwrap();
        let bad = bad_circuit_probe(&BlockSource::Forced { bad: true }, 6, 10, 0).unwrap();
        assert_eq!((good.value, bad.value), (0.0, 1.0));
    }

    #[test]
    fn exact_oracle_limits() {
        assert!((exact_surround_probability(6, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(exact_surround_probability(6, 0.0).unwrap(), 0.0);
        // 4 × 4: the centre fills the interior, so the 8 frame blocks next
        // to it must be bad
        let q: f64 = 0.3;
        assert!((exact_surround_probability(4, q).unwrap() - q.powi(8)).abs() < 1e-15);
    }

    #[test]
    fn planted_matches_exact() {
        let q = 0.45;
        let n = 20_000;
        let est = bad_circuit_probe(&BlockSource::Planted { q }, 6, n, 11).unwrap();
        let p = exact_surround_probability(6, q).unwrap();
        assert!((est.value - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{} vs {p}", est.value);
    }
}
