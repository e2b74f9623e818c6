//! Matrix-free conjugate gradient with deterministic parallel reductions.

use rayon::prelude::*;

use crate::error::{Error, Result};

const CHUNK: usize = 8192;

/// Dot product whose summation order depends only on the vector length.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A` given as a closure
/// writing `A v` into its second argument. Stops when `|r| ≤ rel_tol |b|`.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<CgOutcome>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgOutcome { solution: vec![0.0; n], iterations: 0, residual: 0.0 });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(" (p·Ap = {pap:e} at iteration {it})")));
        }
        let alpha = rr / pap;
        x.par_iter_mut().zip(p.par_iter()).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(ap.par_iter()).for_each(|(ri, ai)| *ri -= alpha * ai);
        let rr_new = dot(&r, &r);
        let rel = rr_new.sqrt() / bnorm;
        if rel <= rel_tol {
            return Ok(CgOutcome { solution: x, iterations: it, residual: rel });
        }
        let beta = rr_new / rr;
        p.par_iter_mut().zip(r.par_iter()).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    Err(Error::SolverDiverged { iterations: max_iter, residual: rr.sqrt() / bnorm })
}
