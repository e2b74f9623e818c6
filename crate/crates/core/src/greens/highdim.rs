//! Scalars of the covariance decomposition of the free field restricted to
//! `Z^3 ⊂ Z^d`, `d ≥ 6`.
//!
//! `κ = P_0[H̃_{Z^3} = ∞]`. The walk's projection on the last `d - 3`
//! coordinates is a lazy walk that moves with probability `(d-3)/d`, so
//! `κ = ((d-3)/d) / g^{(d-3)}(0)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boxsolve::asymptotic_constant;
use super::quadrature::green_quadrature;
use super::GreenTable;
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::rng::{experiment, StreamKey};
use crate::stats::McEstimate;

const TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighDimScalars {
    pub d: usize,
    pub kappa: f64,
    /// `σ²(d) = 1/(2-κ)`
    pub sigma2: f64,
    /// `a_0 = 2(1-κ)/(2-κ)`
    pub a0: f64,
    /// `a_0/κ`, bound on the spectral radius of `G'`.
    pub rho_bound: f64,
}

fn check_dim(d: usize) -> Result<()> {
    if d < 6 {
        return Err(Error::UnsupportedDimension { d, reason: "the decomposition needs d ≥ 6" });
    }
    Ok(())
}

pub fn kappa(d: usize) -> Result<f64> {
    check_dim(d)?;
    // rounding in the (d-3)-fold Bessel product limits the attainable accuracy
    let tol = TOL.max(2e-16 * d as f64);
    let g = green_quadrature(&vec![0; d - 3], tol)?.value;
    Ok((d as f64 - 3.0) / (d as f64 * g))
}

pub fn highdim_scalars(d: usize) -> Result<HighDimScalars> {
    let kappa = kappa(d)?;
    Ok(scalars_from_kappa(d, kappa))
}

pub fn scalars_from_kappa(d: usize, kappa: f64) -> HighDimScalars {
    let a0 = 2.0 * (1.0 - kappa) / (2.0 - kappa);
    HighDimScalars { d, kappa, sigma2: 1.0 / (2.0 - kappa), a0, rho_bound: a0 / kappa }
}

/// Monte Carlo estimate of `κ` from the projected walk on `Z^{d-3}`.
/// Walks reaching Euclidean radius `escape_radius` are credited their
/// far-field escape probability `1 - C |z|^{5-d} / g^{(d-3)}(0)`.
pub fn kappa_mc(d: usize, n: u64, escape_radius: f64, seed: u64) -> Result<McEstimate> {
    check_dim(d)?;
    let dp = d - 3;
    let g0 = green_quadrature(&vec![0; dp], TOL)?.value;
    let cd = asymptotic_constant(dp);
    let move_prob = dp as f64 / d as f64;
    let key = StreamKey::new(seed, experiment::WALKS).child(d as u64);
    let r2 = escape_radius * escape_radius;
    let samples: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.stream(i);
            // first step: leave Z^3 or return immediately
            if !rng.random_bool(move_prob) {
                return 0.0;
            }
            let mut z = vec![0i64; dp];
            z[0] = 1;
            loop {
                let n2: i64 = z.iter().map(|v| v * v).sum();
                if n2 == 0 {
                    return 0.0;
                }
                if n2 as f64 >= r2 {
                    return 1.0 - cd * (n2 as f64).powf(1.0 - dp as f64 / 2.0) / g0;
                }
                let m = rng.random_range(0..2 * dp);
                z[m / 2] += if m % 2 == 0 { 1 } else { -1 };
            }
        })
        .collect();
    Ok(McEstimate::mean_of(&samples, seed).with_meta("d", d))
}

/// `g'(x) = g(x) - σ²(d) δ(x)` for `x ∈ Z^3` embedded in `Z^d`.
pub fn gprime(table: &GreenTable, s: &HighDimScalars, x: &Point) -> Result<f64> {
    if x.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: x.dim() });
    }
    let g = table.get(&x.embed(s.d))?;
    Ok(if x.norm_inf() == 0 { g - s.sigma2 } else { g })
}

/// `G'_A = (g(x - y))_{x,y ∈ A} - σ² I` for `A ⊂ Z^3`.
pub fn gprime_matrix(table: &GreenTable, s: &HighDimScalars, a: &[Point]) -> Result<DMatrix<f64>> {
    let n = a.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = gprime(table, s, &(&a[i] - &a[j]))?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let ev = SymmetricEigen::new(m.clone()).eigenvalues;
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}
