//! Equilibrium measure, capacity and hitting probabilities.

use nalgebra::{Cholesky, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boxsolve::asymptotic_constant;
use super::killed::KilledGreen;
use super::GreenTable;
use crate::error::{Error, Result};
use crate::lattice::{boundaries, neighbors, LatticeBox, Point, PointSet, Window};
use crate::rng::{experiment, StreamKey};
use crate::stats::McEstimate;

/// Largest inner boundary solved exactly through the Green matrix.
pub const EXACT_LIMIT: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumMethod {
    GreenMatrix,
    BoxSolve,
}

#[derive(Clone, Debug)]
pub struct Equilibrium {
    /// Sites of `K`, sorted.
    pub points: Vec<Point>,
    /// `e_K` on `points`; zero off the inner boundary.
    pub measure: Vec<f64>,
    pub capacity: f64,
    pub method: EquilibriumMethod,
    /// Error estimate for the capacity (0 for the exact method up to
    /// round-off and quadrature error).
    pub error: f64,
}

impl Equilibrium {
    /// `P_x[H_K < ∞] = Σ_y g(x - y) e_K(y)`.
    pub fn hitting_probability(&self, x: &Point, table: &GreenTable) -> Result<f64> {
        if self.points.binary_search(x).is_ok() {
            return Ok(1.0);
        }
        let mut s = 0.0;
        for (y, e) in self.points.iter().zip(&self.measure) {
            if *e != 0.0 {
                s += table.between(x, y)? * e;
            }
        }
        Ok(s.clamp(0.0, 1.0))
    }
}

fn sorted_points(k: &PointSet) -> Result<Vec<Point>> {
    if k.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut pts: Vec<Point> = k.iter().cloned().collect();
    pts.sort();
    Ok(pts)
}

/// `e_K` and `cap(K)`.
///
/// When the inner boundary has at most [`EXACT_LIMIT`] sites, solves
/// `Σ_y g(x - y) e_K(y) = 1` on it (the identity extends to all of `K` by the
/// maximum principle). Otherwise solves for the escape probability to the
/// boundary of two enclosing boxes and extrapolates in the box size; fails if
/// the extrapolation error exceeds `tol`.
pub fn equilibrium_and_capacity(k: &PointSet, table: &GreenTable, tol: f64) -> Result<Equilibrium> {
    let pts = sorted_points(k)?;
    let d = table.dim();
    if pts[0].dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: pts[0].dim() });
    }
    let (inner, _) = boundaries(k);
    if inner.len() <= EXACT_LIMIT {
        exact(&pts, &inner, table)
    } else {
        boxed(&pts, d, tol)
    }
}

fn exact(pts: &[Point], inner: &PointSet, table: &GreenTable) -> Result<Equilibrium> {
    let mut bd: Vec<Point> = inner.iter().cloned().collect();
    bd.sort();
    let g = table.matrix(&bd)?;
    let chol = Cholesky::new(g).ok_or_else(|| Error::NotPositiveDefinite(" (Green matrix)".into()))?;
    let e = chol.solve(&DVector::from_element(bd.len(), 1.0));
    let mut measure = vec![0.0; pts.len()];
    for (p, v) in bd.iter().zip(e.iter()) {
        let i = pts.binary_search(p).unwrap();
        measure[i] = *v;
    }
    let capacity = measure.iter().sum();
    Ok(Equilibrium { points: pts.to_vec(), measure, capacity, method: EquilibriumMethod::GreenMatrix, error: 0.0 })
}

/// Escape probabilities from `K` to the outside of `B = bbox(K) ⊕ margin`.
fn escape_to_box(pts: &[Point], d: usize, margin: u64) -> Result<(Vec<f64>, f64)> {
    let mut lo = pts[0].coords().to_vec();
    let mut hi = lo.clone();
    for p in pts {
        for a in 0..d {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let bx = LatticeBox::new(Point::new(lo), Point::new(hi))?.enlarge(margin);
    let half = bx.extents().into_iter().max().unwrap() as f64 / 2.0;
    let w = Window::new(bx);
    let mut in_k = vec![false; w.len()];
    for p in pts {
        in_k[w.index(p).unwrap()] = true;
    }
    let free: Vec<bool> = in_k.iter().map(|b| !b).collect();
    let kg = KilledGreen::new(w.clone(), &free)?;
    let inv = 1.0 / (2 * d) as f64;
    // b(y) = P_y[X_1 ∈ K]
    let b: Vec<f64> = kg
        .site_indices()
        .par_iter()
        .map(|&i| {
            let mut c = 0usize;
            for axis in 0..d {
                for fwd in [false, true] {
                    if let Some(j) = w.step(i, axis, fwd) {
                        c += in_k[j] as usize;
                    }
                }
            }
            c as f64 * inv
        })
        .collect();
    let h = kg.solve_with_tol(&b, 1e-9)?;
    let measure = pts
        .iter()
        .map(|p| {
            let i = w.index(p).unwrap();
            let mut back = 0.0;
            for axis in 0..d {
                for fwd in [false, true] {
                    if let Some(j) = w.step(i, axis, fwd) {
                        back += if in_k[j] { 1.0 } else { h[kg.compact_index(&w.point(j)).unwrap()] };
                    }
                }
            }
            1.0 - back * inv
        })
        .collect();
    Ok((measure, half))
}

fn boxed(pts: &[Point], d: usize, tol: f64) -> Result<Equilibrium> {
    let span = crate::lattice::diameter(pts.iter())?.max(8);
    let base = span / 2;
    let runs = [base, 2 * base, 4 * base]
        .into_iter()
        .map(|m| escape_to_box(pts, d, m))
        .collect::<Result<Vec<_>>>()?;
    // Escaping to the box boundary is a series connection with the exterior:
    // 1/cap_R ≈ 1/cap + a R^{2-d}.
    let p = d as f64 - 2.0;
    let extrapolate = |(ea, ra): &(Vec<f64>, f64), (eb, rb): &(Vec<f64>, f64)| {
        let (ca, cb): (f64, f64) = (ea.iter().sum(), eb.iter().sum());
        let (wa, wb) = (ra.powf(-p), rb.powf(-p));
        (wa - wb) / (wa / cb - wb / ca)
    };
    let coarse = extrapolate(&runs[0], &runs[1]);
    let capacity = extrapolate(&runs[1], &runs[2]);
    let error = (capacity - coarse).abs();
    let (e_last, _) = &runs[2];
    let c_last: f64 = e_last.iter().sum();
    let measure: Vec<f64> = e_last.iter().map(|v| v * capacity / c_last).collect();
    if error > tol {
        return Err(Error::ToleranceNotMet(format!(
            "box-solve capacity error estimate {error:.3e} exceeds {tol:.3e}"
        )));
    }
    Ok(Equilibrium { points: pts.to_vec(), measure, capacity, method: EquilibriumMethod::BoxSolve, error })
}

/// `P_x[H_K < ∞]`.
pub fn hitting_probability(k: &PointSet, x: &Point, table: &GreenTable, tol: f64) -> Result<f64> {
    if k.contains(x) {
        return Ok(1.0);
    }
    equilibrium_and_capacity(k, table, tol)?.hitting_probability(x, table)
}

/// Direct simulation of `P_x[H_K < ∞]`. Walks that reach Euclidean distance
/// `escape_radius` from the origin stop and are credited the far-field
/// estimate `cap_hint · C_d |z|^{2-d}` of their remaining hitting
/// probability (pass `cap_hint = 0` for no credit).
pub fn mc_hitting_probability(
    k: &PointSet,
    x: &Point,
    n: u64,
    escape_radius: f64,
    cap_hint: f64,
    seed: u64,
) -> Result<McEstimate> {
    let d = x.dim();
    if d < 3 {
        return Err(Error::UnsupportedDimension { d, reason: "the walk is recurrent for d < 3" });
    }
    let key = StreamKey::new(seed, experiment::WALKS);
    let cd = asymptotic_constant(d);
    let r2 = escape_radius * escape_radius;
    let samples: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.stream(i);
            let mut z = x.coords().to_vec();
            loop {
                if k.contains(&Point::new(z.clone())) {
                    return 1.0;
                }
                let n2: f64 = z.iter().map(|&v| (v * v) as f64).sum();
                if n2 >= r2 {
                    return cap_hint * cd * n2.powf(1.0 - d as f64 / 2.0);
                }
                let m = rng.random_range(0..2 * d);
                z[m / 2] += if m % 2 == 0 { 1 } else { -1 };
            }
        })
        .collect();
    Ok(McEstimate::mean_of(&samples, seed))
}

/// Points of `K` adjacent to the complement.
pub fn support_of_equilibrium(k: &PointSet) -> PointSet {
    k.iter()
        .filter(|p| neighbors(p, false).iter().any(|q| !k.contains(q)))
        .cloned()
        .collect()
}
