//! Green function from a killed-walk solve on a large cube.
//!
//! With `B = B(0, R)` the strong Markov property at the exit time gives
//! `g(x) = g_B(0, x) + Σ_z P_0[X_{T_B} = z] g(z - x)`. The killed part is
//! solved by CG on the hyperoctahedral fundamental domain
//! `R ≥ y_1 ≥ … ≥ y_d ≥ 0`, the exit term uses the continuum asymptotics
//! `g(y) ≈ C_d |y|^{2-d}`, and the remaining `O(R^{-d})` error is removed by
//! Richardson extrapolation over two radii.

use statrs::function::gamma::gamma;

use super::cg::conjugate_gradient;
use crate::error::{Error, Result};

/// `C_d` in `g(y) ~ C_d |y|^{2-d}`.
pub fn asymptotic_constant(d: usize) -> f64 {
    let df = d as f64;
    df * gamma(df / 2.0 - 1.0) / (2.0 * std::f64::consts::PI.powf(df / 2.0))
}

fn asymptotic_green(d: usize, y: &[f64]) -> f64 {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    asymptotic_constant(d) * r2.powf(1.0 - d as f64 / 2.0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Size of the orbit of a canonical (sorted, non-negative) point under
/// coordinate permutations and sign flips.
fn orbit_size(c: &[i64]) -> f64 {
    let mut w = factorial(c.len());
    let mut run = 1;
    for i in 1..=c.len() {
        if i < c.len() && c[i] == c[i - 1] {
            run += 1;
        } else {
            w /= factorial(run);
            run = 1;
        }
    }
    w * 2f64.powi(c.iter().filter(|&&v| v != 0).count() as i32)
}

fn canonical(v: &mut [i64]) {
    for c in v.iter_mut() {
        *c = c.abs();
    }
    v.sort_unstable_by(|a, b| b.cmp(a));
}

/// All images of `x` under the hyperoctahedral group, without repetition.
fn orbit(x: &[i64]) -> Vec<Vec<i64>> {
    let mut base: Vec<i64> = x.iter().map(|v| v.abs()).collect();
    base.sort_unstable();
    let mut perms = Vec::new();
    loop {
        perms.push(base.clone());
        // next lexicographic permutation
        let Some(i) = (0..base.len().saturating_sub(1)).rev().find(|&i| base[i] < base[i + 1]) else {
            break;
        };
        let j = (i + 1..base.len()).rev().find(|&j| base[j] > base[i]).unwrap();
        base.swap(i, j);
        base[i + 1..].reverse();
    }
    let mut out = Vec::new();
    for p in perms {
        let nz: Vec<usize> = (0..p.len()).filter(|&i| p[i] != 0).collect();
        for mask in 0u64..(1 << nz.len()) {
            let mut q = p.clone();
            for (b, &i) in nz.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    q[i] = -q[i];
                }
            }
            out.push(q);
        }
    }
    out
}

/// Killed Green function `g_B(0, ·)` on `B(0, R)` restricted to the
/// fundamental domain.
pub struct ReducedCubeSolve {
    d: usize,
    radius: i64,
    points: Vec<Vec<i64>>,
    lookup: Vec<u32>,
    values: Vec<f64>,
    pub iterations: usize,
}

impl ReducedCubeSolve {
    pub fn new(d: usize, radius: u64) -> Result<Self> {
        if d < 3 {
            return Err(Error::UnsupportedDimension { d, reason: "the walk is recurrent for d < 3" });
        }
        let r = radius as i64;
        let side = radius as usize + 1;
        let total = side
            .checked_pow(d as u32)
            .filter(|&t| t < u32::MAX as usize)
            .ok_or_else(|| Error::InvalidArgument(format!("cube radius {radius} too large for d = {d}")))?;
        let mut lookup = vec![u32::MAX; total];
        let mut points = Vec::new();
        let mut cur = vec![0i64; d];
        enumerate_sorted(&mut cur, 0, r, &mut |p| {
            lookup[flat(p, side)] = points.len() as u32;
            points.push(p.to_vec());
        });
        let n = points.len();
        let two_d = 2 * d;
        let mut nbrs = vec![u32::MAX; n * two_d];
        let mut weights = vec![0.0; n];
        let mut z = vec![0i64; d];
        for (k, p) in points.iter().enumerate() {
            weights[k] = orbit_size(p);
            for axis in 0..d {
                for (s, step) in [-1i64, 1].into_iter().enumerate() {
                    z.copy_from_slice(p);
                    z[axis] += step;
                    if z[axis].abs() > r {
                        continue;
                    }
                    canonical(&mut z);
                    nbrs[k * two_d + 2 * axis + s] = lookup[flat(&z, side)];
                }
            }
        }
        let inv = 1.0 / two_d as f64;
        let apply = |v: &[f64], out: &mut [f64]| {
            use rayon::prelude::*;
            out.par_iter_mut().enumerate().for_each(|(k, o)| {
                let mut s = 0.0;
                for &j in &nbrs[k * two_d..(k + 1) * two_d] {
                    if j != u32::MAX {
                        s += v[j as usize];
                    }
                }
                *o = weights[k] * (v[k] - inv * s);
            });
        };
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        let out = conjugate_gradient(apply, &b, 1e-13, 20 * n + 1000)?;
        Ok(ReducedCubeSolve { d, radius: r, points, lookup, values: out.solution, iterations: out.iterations })
    }

    /// `g_B(0, x)`; zero outside the cube.
    pub fn killed(&self, x: &[i64]) -> f64 {
        let mut c = x.to_vec();
        canonical(&mut c);
        if c[0] > self.radius {
            return 0.0;
        }
        self.values[self.lookup[flat(&c, self.radius as usize + 1)] as usize]
    }

    /// `Σ_z P_0[X_{T_B} = z] g_asym(z - x)`.
    pub fn exit_correction(&self, x: &[i64]) -> f64 {
        let d = self.d;
        let images = orbit(x);
        let nx = images.len() as f64;
        let mut total = 0.0;
        let mut z = vec![0f64; d];
        for (k, p) in self.points.iter().enumerate() {
            if p[0] != self.radius {
                continue;
            }
            let wy = orbit_size(p);
            let mut inner = 0.0;
            for axis in 0..d {
                if p[axis] != self.radius {
                    break;
                }
                for img in &images {
                    for i in 0..d {
                        z[i] = (p[i] - img[i]) as f64;
                    }
                    z[axis] += 1.0;
                    inner += asymptotic_green(d, &z);
                }
            }
            total += self.values[k] / (2 * d) as f64 * wy / nx * inner;
        }
        total
    }

    pub fn corrected(&self, x: &[i64]) -> f64 {
        self.killed(x) + self.exit_correction(x)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn flat(p: &[i64], side: usize) -> usize {
    p.iter().fold(0usize, |acc, &v| acc * side + v as usize)
}

fn enumerate_sorted(cur: &mut [i64], pos: usize, max: i64, f: &mut impl FnMut(&[i64])) {
    if pos == cur.len() {
        f(cur);
        return;
    }
    let hi = if pos == 0 { max } else { cur[pos - 1] };
    for v in 0..=hi {
        cur[pos] = v;
        enumerate_sorted(cur, pos + 1, max, f);
    }
}

/// Default cube radius for the extrapolation pair `(R, 2R)`.
pub fn default_radius(d: usize) -> u64 {
    match d {
        3 => 24,
        4 => 12,
        5 => 8,
        6 => 6,
        _ => 4,
    }
}

/// Box-solve estimate of `g(x)` for each point, with an error estimate from
/// the Richardson step.
pub fn green_box_many(d: usize, xs: &[Vec<i64>], radius: u64) -> Result<Vec<(f64, f64)>> {
    for x in xs {
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        if x.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) * 2 > radius {
            return Err(Error::InvalidArgument(format!("point {x:?} too far out for cube radius {radius}")));
        }
    }
    let coarse = ReducedCubeSolve::new(d, radius)?;
    let fine = ReducedCubeSolve::new(d, 2 * radius)?;
    let f = 2f64.powi(d as i32);
    Ok(xs
        .iter()
        .map(|x| {
            let a = coarse.corrected(x);
            let b = fine.corrected(x);
            let extrap = (f * b - a) / (f - 1.0);
            (extrap, (extrap - b).abs())
        })
        .collect())
}
