//! Green function by Bessel-integral quadrature.
//!
//! `g(x) = ∫_0^∞ Π_j e^{-t/d} I_{x_j}(t/d) dt` is the expected number of
//! visits to `x` of the continuous-time walk with unit jump rate. The integral
//! is split at a cutoff `T`: `[0, T]` is integrated by adaptive
//! Gauss-Legendre on dyadic panels and `[T, ∞)` term by term from the product
//! of the Hankel expansions, which only decays like `t^{-d/2}`.

use std::sync::OnceLock;

use super::bessel::{asymptotic_threshold, scaled_bessel_i};
use crate::error::{Error, Result};

const TAIL_TERMS: usize = 14;
const MAX_DEPTH: u32 = 30;

pub(crate) struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub(crate) fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub(crate) fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn rules() -> &'static (GaussLegendre, GaussLegendre) {
    static RULES: OnceLock<(GaussLegendre, GaussLegendre)> = OnceLock::new();
    RULES.get_or_init(|| (GaussLegendre::new(20), GaussLegendre::new(31)))
}

/// Distinct absolute coordinates with multiplicities.
fn orders(x: &[i64]) -> Vec<(u64, i32)> {
    let mut abs: Vec<u64> = x.iter().map(|v| v.unsigned_abs()).collect();
    abs.sort_unstable();
    let mut out: Vec<(u64, i32)> = Vec::new();
    for n in abs {
        match out.last_mut() {
            Some((m, c)) if *m == n => *c += 1,
            _ => out.push((n, 1)),
        }
    }
    out
}

/// Coefficients of `Σ_k (-1)^k a_k(n) u^k`, the Hankel series of
/// `sqrt(2πz) e^{-z} I_n(z)` in `u = 1/z`.
fn hankel_coefficients(n: u64, terms: usize) -> Vec<f64> {
    let mu = 4.0 * (n as f64).powi(2);
    let mut c = vec![1.0; terms];
    for k in 1..terms {
        let odd = (2 * k - 1) as f64;
        c[k] = -c[k - 1] * (mu - odd * odd) / (8.0 * k as f64);
    }
    c
}

fn poly_mul(a: &[f64], b: &[f64], terms: usize) -> Vec<f64> {
    let mut out = vec![0.0; terms];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            if i + j < terms {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

/// Result of the quadrature with its error estimate.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub cutoff: f64,
}

/// Green function `g(x)` on `Z^d`, `d ≥ 3`.
pub fn green_quadrature(x: &[i64], tol: f64) -> Result<QuadratureResult> {
    let d = x.len();
    if d < 3 {
        return Err(Error::UnsupportedDimension { d, reason: "the walk is recurrent for d < 3" });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let ord = orders(x);
    let df = d as f64;
    let nmax = ord.last().map(|o| o.0).unwrap_or(0);
    let z_cut = (2.0 * asymptotic_threshold(nmax)).max(200.0);
    let cutoff = df * z_cut;

    let integrand = |t: f64| -> f64 {
        let z = t / df;
        let mut p = 1.0;
        for &(n, m) in &ord {
            p *= scaled_bessel_i(n, z).powi(m);
            if p == 0.0 {
                break;
            }
        }
        p
    };

    // Tail: Π_j (2πt/d)^{-1/2} Σ_k c_k (d/t)^k integrated termwise.
    let mut series = vec![1.0];
    for &(n, m) in &ord {
        let h = hankel_coefficients(n, TAIL_TERMS);
        for _ in 0..m {
            series = poly_mul(&series, &h, TAIL_TERMS);
        }
    }
    // in logs, since (d/2π)^{d/2} overflows for large d
    let log_pref = 0.5 * df * (df / (2.0 * std::f64::consts::PI)).ln();
    let mut tail = 0.0;
    let mut last_term = 0.0;
    for (k, c) in series.iter().enumerate() {
        let e = df / 2.0 + k as f64 - 1.0;
        let term = c * (log_pref + k as f64 * df.ln() - e * cutoff.ln()).exp() / e;
        tail += term;
        last_term = term.abs();
    }

    let (lo, hi) = rules();
    let mut panels = vec![(0.0, 1.0)];
    let mut a = 1.0;
    while a < cutoff {
        let b = (2.0 * a).min(cutoff);
        panels.push((a, b));
        a = b;
    }
    let per_panel = 0.25 * tol / panels.len() as f64;
    // rounding in the d-fold product is amplified about d times
    let noise = 1e-15 * (df / 8.0).max(1.0);
    let mut body = 0.0;
    let mut err = 0.0;
    for &(a, b) in &panels {
        let (v, e) = adaptive(&integrand, (lo, hi), a, b, per_panel, noise, 0)?;
        body += v;
        err += e;
    }
    let error = err + last_term;
    if error > tol {
        return Err(Error::Quadrature(format!(
            "estimated error {error:.3e} exceeds tolerance {tol:.3e} (panel error {err:.3e}, tail truncation {last_term:.3e}) at x = {}",
            describe(x)
        )));
    }
    Ok(QuadratureResult { value: body + tail, error, cutoff })
}

fn describe(x: &[i64]) -> String {
    if x.len() <= 12 {
        format!("{x:?}")
    } else {
        let nonzero = x.iter().filter(|v| **v != 0).count();
        format!("a point of Z^{} with {nonzero} nonzero coordinates", x.len())
    }
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    (lo, hi): (&GaussLegendre, &GaussLegendre),
    a: f64,
    b: f64,
    tol: f64,
    noise: f64,
    depth: u32,
) -> Result<(f64, f64)> {
    let coarse = lo.integrate(f, a, b);
    let fine = hi.integrate(f, a, b);
    let diff = (fine - coarse).abs();
    if diff <= tol || diff <= noise * fine.abs() {
        return Ok((fine, diff));
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(format!(
            "panel [{a}, {b}] did not converge (difference {diff:.3e})"
        )));
    }
    let m = 0.5 * (a + b);
    let (l, el) = adaptive(f, (lo, hi), a, m, 0.5 * tol, noise, depth + 1)?;
    let (r, er) = adaptive(f, (lo, hi), m, b, 0.5 * tol, noise, depth + 1)?;
    Ok((l + r, el + er))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn watson_constant() {
        let r = green_quadrature(&[0, 0, 0], 1e-11).unwrap();
        assert_abs_diff_eq!(r.value, 1.516_386_059_151_978, epsilon = 1e-10);
    }

    #[test]
    fn neighbour_identity() {
        // g(0) = 1 + g(e1) by the first-step decomposition.
        for d in [3usize, 4, 7] {
            let mut e1 = vec![0i64; d];
            e1[0] = 1;
            let g0 = green_quadrature(&vec![0; d], 1e-11).unwrap().value;
            let g1 = green_quadrature(&e1, 1e-11).unwrap().value;
            assert_abs_diff_eq!(g0, 1.0 + g1, epsilon = 1e-9);
        }
    }

    #[test]
    fn harmonic_off_origin() {
        // g is discrete-harmonic away from 0.
        let x = [2i64, 1, 0];
        let g = |p: [i64; 3]| green_quadrature(&p, 1e-11).unwrap().value;
        let mut avg = 0.0;
        for axis in 0..3 {
            for s in [-1, 1] {
                let mut y = x;
                y[axis] += s;
                avg += g(y) / 6.0;
            }
        }
        assert_abs_diff_eq!(g(x), avg, epsilon = 1e-9);
    }

    #[test]
    fn rejects_low_dimension() {
        assert!(green_quadrature(&[0, 0], 1e-6).is_err());
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let gl = GaussLegendre::new(20);
        let v = gl.integrate(&|x: f64| x.powi(38) + 3.0 * x * x, -1.0, 1.0);
        assert_abs_diff_eq!(v, 2.0 / 39.0 + 2.0, epsilon = 1e-13);
    }
}
