//! Green function of the walk killed on leaving a finite set `U`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::cg::conjugate_gradient;
use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Point, PointSet, Window};

const NONE: u32 = u32::MAX;

/// Matrix-free operator `I - P_U` on a finite `U`, with `g_U` columns
/// obtained by CG.
#[derive(Clone, Debug)]
pub struct KilledGreen {
    window: Window,
    /// Window index of each site of `U`, ascending.
    sites: Vec<usize>,
    /// Compact index of each window site, `NONE` outside `U`.
    compact: Vec<u32>,
    nbrs: Vec<u32>,
}

impl KilledGreen {
    /// `U` given as a mask over a window.
    pub fn new(window: Window, inside: &[bool]) -> Result<Self> {
        if inside.len() != window.len() {
            return Err(Error::Geometry(format!(
                "mask has {} entries for a window of {} sites",
                inside.len(),
                window.len()
            )));
        }
        let d = window.dim();
        let mut compact = vec![NONE; window.len()];
        let mut sites = Vec::new();
        for (i, &b) in inside.iter().enumerate() {
            if b {
                compact[i] = sites.len() as u32;
                sites.push(i);
            }
        }
        let mut nbrs = vec![NONE; sites.len() * 2 * d];
        for (k, &i) in sites.iter().enumerate() {
            for axis in 0..d {
                for (s, fwd) in [false, true].into_iter().enumerate() {
                    if let Some(j) = window.step(i, axis, fwd) {
                        nbrs[k * 2 * d + 2 * axis + s] = compact[j];
                    }
                }
            }
        }
        Ok(KilledGreen { window, sites, compact, nbrs })
    }

    /// `U` equal to a whole box.
    pub fn on_box(bx: LatticeBox) -> Result<Self> {
        let w = Window::new(bx);
        let mask = vec![true; w.len()];
        Self::new(w, &mask)
    }

    /// `U` given as an arbitrary finite set.
    pub fn from_set(u: &PointSet) -> Result<Self> {
        let first = u.iter().next().ok_or(Error::EmptySet)?;
        let d = first.dim();
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for p in u {
            if p.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
            for a in 0..d {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let w = Window::new(LatticeBox::new(Point::new(lo), Point::new(hi))?);
        let mut mask = vec![false; w.len()];
        for p in u {
            mask[w.index(p).unwrap()] = true;
        }
        Self::new(w, &mask)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// Number of sites in `U`.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.window.index(p).is_some_and(|i| self.compact[i] != NONE)
    }

    pub fn sites(&self) -> impl Iterator<Item = Point> + '_ {
        self.sites.iter().map(|&i| self.window.point(i))
    }

    /// Window indices of the sites of `U`.
    pub fn site_indices(&self) -> &[usize] {
        &self.sites
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let two_d = 2 * self.dim();
        let inv = 1.0 / two_d as f64;
        out.par_iter_mut().enumerate().for_each(|(k, o)| {
            let mut s = 0.0;
            for &j in &self.nbrs[k * two_d..(k + 1) * two_d] {
                if j != NONE {
                    s += v[j as usize];
                }
            }
            *o = v[k] - inv * s;
        });
    }

    /// Solves `(I - P_U) u = b` for `b` indexed like the sites of `U`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_tol(b, 1e-12)
    }

    pub fn solve_with_tol(&self, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let out = conjugate_gradient(|v, o| self.apply(v, o), b, rel_tol, 50 * n + 1000)?;
        Ok(out.solution)
    }

    /// `g_U(·, y)` over the sites of `U` (compact order); all zero if `y ∉ U`.
    pub fn column(&self, y: &Point) -> Result<Vec<f64>> {
        let n = self.len();
        let Some(k) = self.compact_index(y) else {
            return Ok(vec![0.0; n]);
        };
        let mut b = vec![0.0; n];
        b[k] = 1.0;
        self.solve(&b)
    }

    /// `g_U(·, y)` spread over the whole window, zero off `U`.
    pub fn column_window(&self, y: &Point) -> Result<Vec<f64>> {
        let col = self.column(y)?;
        let mut out = vec![0.0; self.window.len()];
        for (k, &i) in self.sites.iter().enumerate() {
            out[i] = col[k];
        }
        Ok(out)
    }

    pub fn compact_index(&self, p: &Point) -> Option<usize> {
        let i = self.window.index(p)?;
        let k = self.compact[i];
        (k != NONE).then_some(k as usize)
    }

    /// `g_U(x, y)`.
    pub fn value(&self, x: &Point, y: &Point) -> Result<f64> {
        let Some(kx) = self.compact_index(x) else {
            return Ok(0.0);
        };
        if self.compact_index(y).is_none() {
            return Ok(0.0);
        }
        Ok(self.column(y)?[kx])
    }

    /// Dense `g_U` on all of `U` (compact order). Intended for small `U`.
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        let cols: Vec<Result<Vec<f64>>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut b = vec![0.0; n];
                b[k] = 1.0;
                self.solve(&b)
            })
            .collect();
        let mut m = DMatrix::zeros(n, n);
        for (k, c) in cols.into_iter().enumerate() {
            let c = c?;
            for (i, v) in c.into_iter().enumerate() {
                m[(i, k)] = v;
            }
        }
        // symmetrize away solver noise
        let t = m.transpose();
        Ok((m + t) * 0.5)
    }

    /// Exit distribution `P_x[X_{T_U} = z]` over the outer boundary of `U`.
    pub fn exit_distribution(&self, x: &Point) -> Result<Vec<(Point, f64)>> {
        if !self.contains(x) {
            return Ok(vec![(x.clone(), 1.0)]);
        }
        let col = self.column(x)?;
        let d = self.dim();
        let inv = 1.0 / (2 * d) as f64;
        let mut acc: BTreeMap<Point, f64> = BTreeMap::new();
        for (k, &i) in self.sites.iter().enumerate() {
            let p = self.window.point(i);
            for nb in crate::lattice::neighbors(&p, false) {
                if !self.contains(&nb) {
                    *acc.entry(nb).or_insert(0.0) += col[k] * inv;
                }
            }
        }
        Ok(acc.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::GreenTable;
    use crate::lattice::ball;
    use approx::assert_abs_diff_eq;

    #[test]
    fn singleton_is_one() {
        let u: PointSet = [Point::origin(3)].into_iter().collect();
        let k = KilledGreen::from_set(&u).unwrap();
        assert_abs_diff_eq!(k.value(&Point::origin(3), &Point::origin(3)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn outside_is_zero() {
        let k = KilledGreen::on_box(LatticeBox::ball(&Point::origin(3), 2)).unwrap();
        let out: Point = "(3,0,0)".parse().unwrap();
        assert_eq!(k.value(&out, &Point::origin(3)).unwrap(), 0.0);
        assert_eq!(k.value(&Point::origin(3), &out).unwrap(), 0.0);
    }

    #[test]
    fn increases_to_full_green() {
        let o = Point::origin(3);
        let g0 = 1.516_386_059_151_978;
        let mut prev = 0.0;
        for r in [5u64, 10, 20] {
            let k = KilledGreen::on_box(LatticeBox::ball(&o, r)).unwrap();
            let v = k.value(&o, &o).unwrap();
            assert!(v > prev && v < g0);
            prev = v;
        }
        assert!(g0 - prev < 0.02);
    }

    #[test]
    fn strong_markov_identity() {
        let table = GreenTable::new(3, 1e-11).unwrap();
        let u: PointSet = ball(&Point::origin(3), 2)
            .into_iter()
            .filter(|p| p.norm_l1() <= 3)
            .collect();
        let k = KilledGreen::from_set(&u).unwrap();
        let x: Point = "(1,0,0)".parse().unwrap();
        let y: Point = "(0,-1,1)".parse().unwrap();
        let exit = k.exit_distribution(&x).unwrap();
        let mass: f64 = exit.iter().map(|e| e.1).sum();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-9);
        let rhs = k.value(&x, &y).unwrap()
            + exit.iter().map(|(z, p)| p * table.between(z, &y).unwrap()).sum::<f64>();
        assert_abs_diff_eq!(table.between(&x, &y).unwrap(), rhs, epsilon = 1e-9);
    }

    #[test]
    fn dense_is_symmetric_and_dominated() {
        let table = GreenTable::new(3, 1e-11).unwrap();
        let k = KilledGreen::on_box(LatticeBox::ball(&Point::origin(3), 1)).unwrap();
        let m = k.dense().unwrap();
        let pts: Vec<Point> = k.sites().collect();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                assert_abs_diff_eq!(m[(i, j)], m[(j, i)], epsilon = 1e-12);
                assert!(m[(i, j)] <= table.between(&pts[i], &pts[j]).unwrap());
            }
        }
    }
}
