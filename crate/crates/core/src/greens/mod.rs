//! Simple-random-walk potential theory on `Z^d`.

pub mod bessel;
pub mod boxsolve;
pub mod cg;
pub mod highdim;
pub mod killed;
pub mod potential;
pub mod quadrature;

use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Point;

pub use highdim::{highdim_scalars, kappa, HighDimScalars};
pub use killed::KilledGreen;
pub use potential::{equilibrium_and_capacity, hitting_probability, Equilibrium};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreenMethod {
    Quadrature,
    Box,
    Both,
}

impl std::str::FromStr for GreenMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" => Ok(GreenMethod::Quadrature),
            "box" => Ok(GreenMethod::Box),
            "both" => Ok(GreenMethod::Both),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub value: f64,
    pub error: f64,
    pub method: GreenMethod,
}

/// `g(x)` on `Z^d` with `d = x.dim()`.
///
/// `Both` runs the two methods and fails unless they agree within the
/// combined error estimates (or `tol`, whichever is larger); the quadrature
/// value is returned.
pub fn green(x: &Point, tol: f64, method: GreenMethod) -> Result<GreenValue> {
    let d = x.dim();
    match method {
        GreenMethod::Quadrature => {
            let q = quadrature::green_quadrature(x.coords(), tol)?;
            Ok(GreenValue { value: q.value, error: q.error, method })
        }
        GreenMethod::Box => {
            let (value, error) = green_box(x, d)?;
            if error > tol {
                return Err(Error::ToleranceNotMet(format!(
                    "box solve error estimate {error:.3e} exceeds {tol:.3e}"
                )));
            }
            Ok(GreenValue { value, error, method })
        }
        GreenMethod::Both => {
            let q = quadrature::green_quadrature(x.coords(), tol)?;
            let (b, be) = green_box(x, d)?;
            let diff = (q.value - b).abs();
            if diff > tol.max(q.error + be) {
                return Err(Error::ToleranceNotMet(format!(
                    "quadrature {} and box solve {} differ by {diff:.3e}",
                    q.value, b
                )));
            }
            Ok(GreenValue { value: q.value, error: diff.max(q.error), method })
        }
    }
}

fn green_box(x: &Point, d: usize) -> Result<(f64, f64)> {
    if d > 7 {
        return Err(Error::UnsupportedDimension { d, reason: "box solve is limited to d ≤ 7" });
    }
    let r = boxsolve::default_radius(d).max(2 * x.norm_inf());
    Ok(boxsolve::green_box_many(d, &[x.coords().to_vec()], r)?[0])
}

/// Lazily filled table of `g` keyed by canonical displacement.
pub struct GreenTable {
    d: usize,
    tol: f64,
    cache: RwLock<HashMap<Point, f64>>,
}

impl GreenTable {
    pub fn new(d: usize, tol: f64) -> Result<Self> {
        if d < 3 {
            return Err(Error::UnsupportedDimension { d, reason: "the walk is recurrent for d < 3" });
        }
        Ok(GreenTable { d, tol, cache: RwLock::new(HashMap::new()) })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, x: &Point) -> Result<f64> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.dim() });
        }
        let key = x.canonical_abs();
        if let Some(v) = self.cache.read().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = quadrature::green_quadrature(key.coords(), self.tol)?.value;
        self.cache.write().unwrap().insert(key, v);
        Ok(v)
    }

    /// `g(x - y)`.
    pub fn between(&self, x: &Point, y: &Point) -> Result<f64> {
        self.get(&(x - y))
    }

    /// Dense matrix `(g(x_i - x_j))_{ij}`.
    pub fn matrix(&self, pts: &[Point]) -> Result<DMatrix<f64>> {
        let n = pts.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.between(&pts[i], &pts[j])?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn methods_agree_in_d3() {
        let x: Point = "(1,1,0)".parse().unwrap();
        let v = green(&x, 1e-6, GreenMethod::Both).unwrap();
        let b = green(&x, 1e-6, GreenMethod::Box).unwrap();
        assert_abs_diff_eq!(v.value, b.value, epsilon = 1e-6);
    }

    #[test]
    fn symmetric_under_hyperoctahedral_group() {
        let t = GreenTable::new(4, 1e-10).unwrap();
        let a = t.get(&Point::new(vec![2, -1, 0, 3])).unwrap();
        let b = quadrature::green_quadrature(&[-3, 0, 2, 1], 1e-10).unwrap().value;
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn bounded_by_value_at_origin() {
        let t = GreenTable::new(3, 1e-10).unwrap();
        let g0 = t.get(&Point::origin(3)).unwrap();
        assert!(g0 >= 1.0);
        for p in crate::lattice::ball(&Point::origin(3), 2) {
            let g = t.get(&p).unwrap();
            assert!(g > 0.0 && g <= g0);
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("both".parse::<GreenMethod>().unwrap(), GreenMethod::Both);
        assert!("exact".parse::<GreenMethod>().is_err());
    }
}
