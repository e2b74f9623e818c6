//! Classification of decay curves `L ↦ p(L)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::McEstimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayClass {
    SupercriticalLike,
    PolynomialLike,
    StretchedExponentialLike,
    /// Every estimate is 0 (`one = false`) or 1 (`one = true`), so no fit is
    /// possible; with trailing zeros the curve counts as saturated at 0.
    Saturated { one: bool },
}

impl DecayClass {
    /// Stretched exponential decay or anything faster, including curves that
    /// are already 0 at every size.
    pub fn stretched_or_faster(&self) -> bool {
        matches!(self, DecayClass::StretchedExponentialLike | DecayClass::Saturated { one: false })
    }

    /// No visible decay, including curves that are 1 at every size.
    pub fn supercritical(&self) -> bool {
        matches!(self, DecayClass::SupercriticalLike | DecayClass::Saturated { one: true })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    /// `(L, p̂, SE)`
    pub points: Vec<(f64, f64, f64)>,
    pub class: DecayClass,
    /// `p ≈ c exp(-c' L^ρ)`
    pub c: f64,
    pub c_prime: f64,
    pub rho: f64,
    pub sse_stretched: f64,
    /// `p ≈ c_poly L^{-exponent}`
    pub poly_c: f64,
    pub poly_exponent: f64,
    pub sse_poly: f64,
}

const RHO_MIN: f64 = 0.02;
const RHO_STEP: f64 = 0.01;

/// Least squares `y ≈ a + b x`; returns `(a, b, sse)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let sse = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    (a, b, sse)
}

/// Fits `log p` against `L^ρ` over a grid of `ρ ∈ (0, 1]` and against
/// `log L`, and classifies the curve. Needs at least 3 sizes.
pub fn fit_decay(curve: &[(f64, McEstimate)]) -> Result<DecayFit> {
    if curve.len() < 3 {
        return Err(Error::InvalidArgument("fit_decay needs at least 3 sizes".into()));
    }
    let mut pts: Vec<(f64, f64, f64)> = curve.iter().map(|(l, e)| (*l, e.value, e.se)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let empty = |class| DecayFit {
        points: pts.clone(),
        class,
        c: f64::NAN,
        c_prime: f64::NAN,
        rho: f64::NAN,
        sse_stretched: f64::NAN,
        poly_c: f64::NAN,
        poly_exponent: f64::NAN,
        sse_poly: f64::NAN,
    };
    if pts.iter().all(|p| p.1 == 0.0 || p.1 == 1.0) {
        let one = pts.last().unwrap().1 == 1.0;
        return Ok(empty(DecayClass::Saturated { one }));
    }
    let pos: Vec<&(f64, f64, f64)> = pts.iter().filter(|p| p.1 > 0.0).collect();
    if pos.len() < 3 {
        return Ok(empty(DecayClass::Saturated { one: false }));
    }
    let ls: Vec<f64> = pos.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pos.iter().map(|p| p.1.ln()).collect();
    // variance of log p̂ from the delta method
    let noise: f64 = pos.iter().map(|p| (p.2 / p.1).powi(2)).sum();

    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    let steps = ((1.0 - RHO_MIN) / RHO_STEP).round() as usize;
    for k in 0..=steps {
        let rho = RHO_MIN + k as f64 * RHO_STEP;
        let xs: Vec<f64> = ls.iter().map(|l| l.powf(rho)).collect();
        let (a, b, sse) = linear_fit(&xs, &ys);
        if sse < best.0 {
            best = (sse, rho, a, b);
        }
    }
    let (sse_stretched, rho, a, b) = best;
    let logs: Vec<f64> = ls.iter().map(|l| l.ln()).collect();
    let (pa, pb, sse_poly) = linear_fit(&logs, &ys);

    let (f, l) = (pos[0], pos[pos.len() - 1]);
    let drop = f.1.ln() - l.1.ln();
    let sigma = ((f.2 / f.1).powi(2) + (l.2 / l.1).powi(2)).sqrt();
    let class = if drop <= (2.0 * sigma).max(0.05) {
        DecayClass::SupercriticalLike
    } else if rho <= RHO_MIN + 3.0 * RHO_STEP + 1e-12 || sse_poly <= sse_stretched + noise {
        DecayClass::PolynomialLike
    } else {
        DecayClass::StretchedExponentialLike
    };
    Ok(DecayFit {
        points: pts,
        class,
        c: a.exp(),
        c_prime: -b,
        rho,
        sse_stretched,
        poly_c: pa.exp(),
        poly_exponent: -pb,
        sse_poly,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(ls: &[f64], p: impl Fn(f64) -> f64) -> Vec<(f64, McEstimate)> {
        ls.iter().map(|&l| (l, McEstimate { value: p(l), se: 0.0, n: 0, seed: 0, meta: vec![] })).collect()
    }

    const LS: [f64; 5] = [4.0, 8.0, 16.0, 32.0, 64.0];

    #[test]
    fn stretched_synthetic() {
        let f = fit_decay(&exact(&LS, |l| (-0.3 * l.sqrt()).exp())).unwrap();
        assert_eq!(f.class, DecayClass::StretchedExponentialLike);
        assert!((0.4..=0.6).contains(&f.rho), "{}", f.rho);
        assert!((f.c_prime - 0.3).abs() < 0.05);
    }

    #[test]
    fn polynomial_synthetic() {
        let f = fit_decay(&exact(&LS, |l| l.powi(-2))).unwrap();
        assert_eq!(f.class, DecayClass::PolynomialLike);
        assert!((f.poly_exponent - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_is_supercritical() {
        let f = fit_decay(&exact(&LS, |_| 0.9)).unwrap();
        assert_eq!(f.class, DecayClass::SupercriticalLike);
    }

    #[test]
    fn saturated_curves() {
        assert_eq!(fit_decay(&exact(&LS, |_| 0.0)).unwrap().class, DecayClass::Saturated { one: false });
        assert_eq!(fit_decay(&exact(&LS, |_| 1.0)).unwrap().class, DecayClass::Saturated { one: true });
        assert!(fit_decay(&exact(&LS, |_| 0.0)).unwrap().class.stretched_or_faster());
        assert!(fit_decay(&exact(&LS, |_| 1.0)).unwrap().class.supercritical());
    }

    #[test]
    fn too_few_points() {
        assert!(fit_decay(&exact(&[1.0, 2.0], |_| 0.5)).is_err());
    }
}
