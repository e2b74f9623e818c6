//! Conditioning on the values of the field on a set `K`.
//!
//! Given `φ|_K`, the field off `K` is `φ̃ + μ` with `μ_x` the harmonic
//! extension `E_x[H_K < ∞, φ_{X_{H_K}}]` of the boundary values and `φ̃`
//! independent of `φ|_K` with covariance `g_{K^c}`.

use nalgebra::{Cholesky, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FieldSampler, ScalarField, SpectralSampler};
use crate::error::{Error, Result};
use crate::greens::{GreenTable, KilledGreen};
use crate::lattice::{LatticeBox, Point, Window};
use crate::rng::{experiment, StreamKey};
use crate::stats::{bernoulli_se, covariance_with_se};

/// Infinite-volume shift `μ_x = Σ_y [g(x, K) G_K^{-1}]_y φ_y`.
pub struct ConditionalShift {
    points: Vec<Point>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl ConditionalShift {
    pub fn new(boundary: &[(Point, f64)], table: &GreenTable) -> Result<Self> {
        if boundary.is_empty() {
            return Err(Error::EmptySet);
        }
        let points: Vec<Point> = boundary.iter().map(|b| b.0.clone()).collect();
        let values: Vec<f64> = boundary.iter().map(|b| b.1).collect();
        let g = table.matrix(&points)?;
        let chol = Cholesky::new(g).ok_or_else(|| Error::NotPositiveDefinite(" (Green matrix on K)".into()))?;
        let weights = chol.solve(&DVector::from_column_slice(&values)).iter().cloned().collect();
        Ok(ConditionalShift { points, values, weights })
    }

    /// `μ_x`.
    pub fn at(&self, x: &Point, table: &GreenTable) -> Result<f64> {
        if let Some(i) = self.points.iter().position(|p| p == x) {
            return Ok(self.values[i]);
        }
        let mut s = 0.0;
        for (y, w) in self.points.iter().zip(&self.weights) {
            s += table.between(x, y)? * w;
        }
        Ok(s)
    }
}

/// `μ_x` for the boundary values `boundary` on `K`.
pub fn conditional_shift(boundary: &[(Point, f64)], x: &Point, table: &GreenTable) -> Result<f64> {
    ConditionalShift::new(boundary, table)?.at(x, table)
}

/// Shift for the zero-boundary field on a box window: `μ` is harmonic on
/// `U = W \ K`, equal to `φ` on `K` and zero outside `W`.
pub struct WindowShift {
    window: Window,
    k_idx: Vec<usize>,
    u: KilledGreen,
    /// `h_z = P_·[X_{H_{K ∪ W^c}} = z]` for each `z ∈ K`, over the window.
    basis: Vec<Vec<f64>>,
}

impl WindowShift {
    pub fn new(window: Window, k: &[Point]) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::EmptySet);
        }
        let k_idx = k.iter().map(|p| window.index_or_err(p)).collect::<Result<Vec<_>>>()?;
        let mut mask = vec![true; window.len()];
        for &i in &k_idx {
            mask[i] = false;
        }
        let u = KilledGreen::new(window.clone(), &mask)?;
        let d = window.dim();
        let inv = 1.0 / (2 * d) as f64;
        let mut basis = Vec::with_capacity(k_idx.len());
        for &z in &k_idx {
            let mut b = vec![0.0; u.len()];
            for axis in 0..d {
                for fwd in [false, true] {
                    if let Some(j) = window.step(z, axis, fwd) {
                        if let Some(c) = u.compact_index(&window.point(j)) {
                            b[c] += inv;
                        }
                    }
                }
            }
            let h = u.solve(&b)?;
            let mut full = vec![0.0; window.len()];
            for (c, &i) in u.site_indices().iter().enumerate() {
                full[i] = h[c];
            }
            full[z] = 1.0;
            basis.push(full);
        }
        Ok(WindowShift { window, k_idx, u, basis })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn complement(&self) -> &KilledGreen {
        &self.u
    }

    pub fn k_indices(&self) -> &[usize] {
        &self.k_idx
    }

    /// `μ` for the boundary values `vals` (aligned with `K`).
    pub fn shift_from(&self, vals: &[f64]) -> Vec<f64> {
        let mut mu = vec![0.0; self.window.len()];
        for (h, &v) in self.basis.iter().zip(vals) {
            for (m, x) in mu.iter_mut().zip(h) {
                *m += v * x;
            }
        }
        mu
    }

    /// `μ` computed from the values of `field` on `K`.
    pub fn shift(&self, field: &[f64]) -> Vec<f64> {
        let vals: Vec<f64> = self.k_idx.iter().map(|&i| field[i]).collect();
        self.shift_from(&vals)
    }

    /// `φ̃ = φ - μ`.
    pub fn residual(&self, field: &[f64]) -> Vec<f64> {
        let mu = self.shift(field);
        field.iter().zip(mu).map(|(f, m)| f - m).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub n: u64,
    /// `max_K |φ̃|`, zero up to round-off.
    pub residual_on_k: f64,
    /// Largest `|corr(φ̃_x, φ_z)|` over the probed pairs, in units of `1/sqrt(n)`.
    pub max_corr_z: f64,
    /// Largest `|Cov(φ̃_x, φ̃_y) - g_U(x,y)| / SE` over the probed pairs.
    pub max_cov_z: f64,
    pub corr_pairs: usize,
    pub cov_pairs: Vec<(Point, Point, f64, f64)>,
    pub pass: bool,
}

/// Samples the zero-boundary field on `interior`, forms `φ̃ = φ - μ` for the
/// conditioning set `k`, and checks that `φ̃` is uncorrelated with `φ|_K` and
/// has covariance `g_U`, `U = interior \ K` (gates at 4 SE).
pub fn conditional_decomposition_check(
    interior: &LatticeBox,
    k: &[Point],
    n: u64,
    seed: u64,
) -> Result<DecompositionReport> {
    let sampler = SpectralSampler::new(interior.clone());
    let w = sampler.window().clone();
    let shift = WindowShift::new(w.clone(), k)?;
    let in_k = |i: usize| shift.k_idx.contains(&i);

    // sites of U within sup-distance 1 of K
    let mut near: Vec<usize> = Vec::new();
    for &z in &shift.k_idx {
        let pz = w.point(z);
        for q in crate::lattice::ball(&pz, 1) {
            if let Some(i) = w.index(&q) {
                if !in_k(i) && !near.contains(&i) {
                    near.push(i);
                }
            }
        }
    }
    near.sort_unstable();
    if near.len() < 2 {
        return Err(Error::Geometry("conditioning set leaves no neighbouring sites".into()));
    }
    let far = (0..w.len()).filter(|&i| !in_k(i)).max_by_key(|&i| {
        let p = w.point(i);
        shift.k_idx.iter().map(|&z| (&p - &w.point(z)).norm_inf()).min().unwrap()
    });
    let far = far.unwrap();
    let cov_idx = [(near[0], near[0]), (near[0], near[1]), (near[0], far)];

    let key = StreamKey::new(seed, experiment::CONDITIONAL);
    let rows: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut phi = vec![0.0; w.len()];
            sampler.sample_into(&mut key.stream(i), &mut phi);
            let tilde = shift.residual(&phi);
            let on_k = shift.k_idx.iter().map(|&z| tilde[z].abs()).fold(0.0, f64::max);
            let probes: Vec<f64> = near.iter().map(|&x| tilde[x]).chain(std::iter::once(tilde[far])).collect();
            let kv: Vec<f64> = shift.k_idx.iter().map(|&z| phi[z]).collect();
            (probes, kv, on_k)
        })
        .collect();

    let residual_on_k = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let col = |j: usize| -> Vec<f64> { rows.iter().map(|r| r.0[j]).collect() };
    let kcol = |j: usize| -> Vec<f64> { rows.iter().map(|r| r.1[j]).collect() };

    let sqrt_n = (n as f64).sqrt();
    let mut max_corr_z: f64 = 0.0;
    let mut corr_pairs = 0;
    for a in 0..near.len() {
        let xa = col(a);
        for b in 0..shift.k_idx.len() {
            let zb = kcol(b);
            let (c, _) = covariance_with_se(&xa, &zb);
            let (va, _) = covariance_with_se(&xa, &xa);
            let (vb, _) = covariance_with_se(&zb, &zb);
            let corr = c / (va * vb).sqrt();
            max_corr_z = max_corr_z.max(corr.abs() * sqrt_n);
            corr_pairs += 1;
        }
    }

    let pos = |i: usize| if i == far { near.len() } else { near.iter().position(|&x| x == i).unwrap() };
    let mut max_cov_z: f64 = 0.0;
    let mut cov_pairs = Vec::new();
    for &(x, y) in &cov_idx {
        let (c, se) = covariance_with_se(&col(pos(x)), &col(pos(y)));
        let px = w.point(x);
        let py = w.point(y);
        let exact = shift.u.value(&px, &py)?;
        max_cov_z = max_cov_z.max((c - exact).abs() / se);
        cov_pairs.push((px, py, c, exact));
    }
    let pass = residual_on_k < 1e-9 && max_corr_z <= 4.0 && max_cov_z <= 4.0;
    Ok(DecompositionReport { n, residual_on_k, max_corr_z, max_cov_z, corr_pairs, cov_pairs, pass })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FkgReport {
    /// `P[A | φ_K = α]`
    pub p_equal: f64,
    pub se_equal: f64,
    /// `P[A | φ_K ≥ α]`
    pub p_above: f64,
    pub se_above: f64,
    pub accepted: u64,
    pub n: u64,
    pub holds: bool,
    pub inconclusive: bool,
}

/// Compares `P[A | φ_K = α]` (shift construction) with `P[A | φ_K ≥ α]`
/// (rejection) for an increasing event `A` on the window `interior`.
pub fn fkg_mc_check<E>(interior: &LatticeBox, k: &[Point], event: E, alpha: f64, n: u64, seed: u64) -> Result<FkgReport>
where
    E: Fn(&ScalarField) -> bool + Sync,
{
    let sampler = SpectralSampler::new(interior.clone());
    let w = sampler.window().clone();
    let shift = WindowShift::new(w.clone(), k)?;
    let m_alpha = shift.shift_from(&vec![alpha; k.len()]);
    let key = StreamKey::new(seed, experiment::FKG);
    let outcomes: Vec<(bool, Option<bool>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut phi = vec![0.0; w.len()];
            sampler.sample_into(&mut key.stream(i), &mut phi);
            let accepted = shift.k_idx.iter().all(|&z| phi[z] >= alpha);
            let above = accepted.then(|| event(&ScalarField::new(w.clone(), phi.clone())));
            let tilde = shift.residual(&phi);
            let cond: Vec<f64> = tilde.iter().zip(&m_alpha).map(|(t, m)| t + m).collect();
            (event(&ScalarField::new(w.clone(), cond)), above)
        })
        .collect();
    let eq = outcomes.iter().filter(|o| o.0).count() as u64;
    let accepted = outcomes.iter().filter(|o| o.1.is_some()).count() as u64;
    let above = outcomes.iter().filter(|o| o.1 == Some(true)).count() as u64;
    let p_equal = eq as f64 / n as f64;
    let p_above = if accepted == 0 { f64::NAN } else { above as f64 / accepted as f64 };
    let se_equal = bernoulli_se(p_equal, n);
    let se_above = if accepted == 0 { f64::NAN } else { bernoulli_se(p_above, accepted) };
    let inconclusive = accepted < 50;
    let holds = !inconclusive && p_equal <= p_above + 4.0 * (se_equal.powi(2) + se_above.powi(2)).sqrt();
    Ok(FkgReport { p_equal, se_equal, p_above, se_above, accepted, n, holds, inconclusive })
}
