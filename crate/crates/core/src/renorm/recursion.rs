//! The sequences `β_n`, `h_n`, `K_n` and the bounds on `p_n(h_n)`.
//!
//! Probabilities are carried as logarithms: `p_n` bounds shrink like
//! `exp(-c 2^n)` and leave the `f64` range after a few levels.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::{ln_big, RenormConfig};
use crate::error::{Error, Result};
use crate::field::{FieldSampler, SpectralSampler};
use crate::lattice::{LatticeBox, Point};
use crate::perc::crossing_level;
use crate::rng::{experiment, StreamKey};
use crate::stats::McEstimate;

/// `log(e^a + e^b)`
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(1 + e^x)`
fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn beta_sequence(cfg: &RenormConfig, n_max: u32) -> Result<Vec<f64>> {
    (0..=n_max).map(|n| cfg.beta(n)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HSequence {
    /// `h_0, …, h_{n_max}`
    pub values: Vec<f64>,
    pub h_infinity: f64,
    /// Terms summed for `h_∞`.
    pub terms: u32,
    /// Bound on the neglected tail.
    pub tail_bound: f64,
}

const H_TERMS_MAX: u32 = 2000;

/// Partial sums of `h_{n+1} - h_n = c1 β_n (2 l0^{-(d-2)})^{n+1}` and their
/// limit. Since `β_{n+1} ≤ 2β_n` for `n ≥ 1`, increments past the first
/// shrink by at least `r = 4 l0^{-(d-2)} < 1`, so the tail after the last
/// summed increment `t` is at most `t r / (1 - r)`.
pub fn h_sequence(cfg: &RenormConfig, n_max: u32) -> Result<HSequence> {
    let r = 4.0 * (cfg.l0 as f64).powf(-(cfg.d as f64 - 2.0));
    let mut values = vec![cfg.h0];
    let mut h = cfg.h0;
    let mut n = 0u32;
    let mut tail_bound;
    loop {
        let t = cfg.increment(n)?;
        h += t;
        n += 1;
        if n <= n_max {
            values.push(h);
        }
        tail_bound = if n >= 2 { t * r / (1.0 - r) } else { f64::INFINITY };
        let converged = tail_bound <= f64::EPSILON * h.abs().max(1.0) * 0.5;
        if (converged && n > n_max) || n >= H_TERMS_MAX.max(n_max + 1) {
            break;
        }
    }
    Ok(HSequence { values, h_infinity: h, terms: n, tail_bound })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KSequence {
    pub k0: f64,
    pub values: Vec<f64>,
    /// `Σ_{m<n} log(1 + e^{K_m} 3^{2^{-(m+1)}} e^{-2^{-(m+1)}(β_m - M(m))^2})`
    pub subtracted: f64,
}

/// `K_{n+1} = K_n - log(1 + e^{K_n} 3^{2^{-(n+1)}} e^{-2^{-(n+1)}(β_n - M(n, L0))^2})`.
pub fn k_sequence(cfg: &RenormConfig, n_max: u32) -> Result<KSequence> {
    let k0 = cfg.k0()?;
    let mut values = vec![k0];
    let mut k = k0;
    let mut subtracted = 0.0;
    for n in 0..n_max {
        let gap = cfg.beta(n)? - cfg.m_term(n)?;
        let w = 0.5f64.powi(n as i32 + 1);
        let step = softplus(k + w * (3f64.ln() - gap * gap));
        k -= step;
        subtracted += step;
        values.push(k);
    }
    Ok(KSequence { k0, values, subtracted })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeedSource {
    /// From [`p0_upper_bound`].
    Analytic,
    /// Monte Carlo frequency of the level-0 crossing event.
    MonteCarlo { n: u64, seed: u64 },
    /// Supplied directly.
    Given,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceFlags {
    /// `p0 ≤ e^{-K0}`
    pub seed_condition: bool,
    pub h_increasing: bool,
    pub k_at_most_k0: bool,
    pub k_at_least_k0_minus_b: bool,
    /// Direct recursion stays below `e^{-K_n 2^n}`.
    pub chain_consistent: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceProvenance {
    /// `analytic-conditional`, `empirical` or `none`.
    pub certificate: String,
    pub seed: SeedSource,
    pub constants: super::ConstantsLedger,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecursionTrace {
    pub d: usize,
    #[serde(rename = "L0")]
    pub big_l0: u64,
    pub l0: u64,
    pub h0: f64,
    #[serde(rename = "Ln")]
    pub scales: Vec<String>,
    #[serde(rename = "Mn")]
    pub m_n: Vec<f64>,
    pub beta_n: Vec<f64>,
    pub h_n: Vec<f64>,
    #[serde(rename = "K_n")]
    pub k_n: Vec<f64>,
    pub k0: f64,
    pub b: f64,
    pub p0: f64,
    /// Upper bounds on `p_n(h_n)` from `p_{n+1} ≤ p_n^2 + 3e^{-(β_n - M)^2}`;
    /// empty when the seed condition fails.
    pub pn_bound: Vec<f64>,
    pub log_pn_bound: Vec<f64>,
    /// `-(K0 - B) 2^n`
    pub log_pn_target: Vec<f64>,
    pub h_infinity: f64,
    /// `log 2 / log l0`
    pub rho: f64,
    pub valid: bool,
    pub flags: TraceFlags,
    pub provenance: TraceProvenance,
}

/// Runs the recursion from a seed value `p0` for `n = 0..=n_max`.
pub fn certify_from_seed(cfg: &RenormConfig, p0: f64, source: SeedSource, n_max: u32) -> Result<RecursionTrace> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidArgument(format!("p0 = {p0} is not a probability")));
    }
    let b = cfg.ledger.get("B")?;
    let ks = k_sequence(cfg, n_max)?;
    let hs = h_sequence(cfg, n_max)?;
    let beta = beta_sequence(cfg, n_max)?;
    let m_n: Vec<f64> = (0..=n_max).map(|n| cfg.m_term(n)).collect::<Result<_>>()?;
    let k0 = ks.k0;
    let seed_condition = p0.ln() <= -k0 + 1e-12 * k0.abs().max(1.0);
    // increments c1 β_n (2 l0^{-(d-2)})^{n+1} are positive exactly when c1
    // and every β_n are; the partial sums themselves stall at f64 resolution
    let h_increasing = cfg.ledger.get("c1")? > 0.0 && beta.iter().all(|b| *b > 0.0);
    let k_at_most_k0 = ks.values.iter().all(|&k| k <= k0);
    let k_at_least_k0_minus_b = ks.values.iter().all(|&k| k >= k0 - b);
    let two = |n: usize| 2f64.powi(n as i32);

    let (mut log_p, mut chain_consistent) = (Vec::new(), seed_condition);
    if seed_condition {
        let mut lp = p0.ln();
        log_p.push(lp);
        for n in 0..n_max as usize {
            let gap = beta[n] - m_n[n];
            lp = log_add(2.0 * lp, 3f64.ln() - gap * gap);
            log_p.push(lp);
        }
        for (n, lp) in log_p.iter().enumerate() {
            let chain = -ks.values[n] * two(n);
            if *lp > chain + 1e-9 * chain.abs().max(1.0) {
                chain_consistent = false;
            }
        }
    }
    let flags = TraceFlags { seed_condition, h_increasing, k_at_most_k0, k_at_least_k0_minus_b, chain_consistent };
    let valid = seed_condition && k_at_most_k0 && k_at_least_k0_minus_b && chain_consistent;
    let certificate = match (valid, source) {
        (false, _) => "none",
        (true, SeedSource::MonteCarlo { .. }) => "empirical",
        (true, _) => "analytic-conditional",
    };
    Ok(RecursionTrace {
        d: cfg.d,
        big_l0: cfg.big_l0,
        l0: cfg.l0,
        h0: cfg.h0,
        scales: (0..=n_max).map(|n| cfg.scale(n).to_string()).collect(),
        m_n,
        beta_n: beta,
        h_n: hs.values,
        k_n: ks.values,
        k0,
        b,
        p0,
        pn_bound: log_p.iter().map(|l| l.exp()).collect(),
        log_pn_bound: log_p,
        log_pn_target: (0..=n_max as usize).map(|n| -(k0 - b) * two(n)).collect(),
        h_infinity: hs.h_infinity,
        rho: 2f64.ln() / (cfg.l0 as f64).ln(),
        valid,
        flags,
        provenance: TraceProvenance {
            certificate: certificate.into(),
            seed: source,
            constants: cfg.ledger.clone(),
        },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct P0Bound {
    /// `|K| = (3L0)^d`
    pub sites: f64,
    /// `A = (2 g(0) log|K|)^{1/2}`
    pub a: f64,
    /// `A + |K| (g(0)/A) e^{-A²/(2g(0))}`, a bound on `E[max_K φ]`
    pub e_max: f64,
    pub bound: f64,
}

/// `P[max_K φ ≥ h0] ≤ exp(-(h0 - E_max)^2 / (2 g(0)))` on the box
/// `K = B̃_{0,0}` of side `3L0`, which contains the level-0 crossing event.
pub fn p0_upper_bound(cfg: &RenormConfig) -> Result<P0Bound> {
    let g0 = cfg.ledger.get("g0")?;
    let log_sites = cfg.d as f64 * (3.0 * cfg.big_l0 as f64).ln();
    let a = (2.0 * g0 * log_sites).sqrt();
    // |K| e^{-A²/(2g0)} = 1
    let e_max = a + g0 / a;
    if cfg.h0 <= e_max {
        return Err(Error::RegimeNotApplicable(format!(
            "h0 = {} does not exceed the bound {e_max:.6} on E[max φ]; increase h0",
            cfg.h0
        )));
    }
    let bound = (-(cfg.h0 - e_max).powi(2) / (2.0 * g0)).exp();
    Ok(P0Bound { sites: log_sites.exp(), a, e_max, bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenericTrace {
    pub direction: Monotonicity,
    /// Levels: `h_n` for increasing events, `h0 - (h_n - h0)` for decreasing.
    pub levels: Vec<f64>,
    pub q: Vec<f64>,
    pub log_q: Vec<f64>,
    /// `3e^{-(β_n - M(n, L0))^2}`
    pub additive: Vec<f64>,
}

/// `q_{n+1} ≤ q_n^2 + 3e^{-(β_n - M(n, L0))^2}` for events that are
/// increasing or decreasing in the field. Decreasing events become
/// increasing under `φ ↦ -φ`, which reflects the level sequence.
pub fn generic_recursion(cfg: &RenormConfig, q0: f64, direction: Monotonicity, n_max: u32) -> Result<GenericTrace> {
    if !(0.0..=1.0).contains(&q0) {
        return Err(Error::InvalidArgument(format!("q0 = {q0} is not a probability")));
    }
    let hs = h_sequence(cfg, n_max)?;
    let levels = match direction {
        Monotonicity::Increasing => hs.values,
        Monotonicity::Decreasing => hs.values.iter().map(|h| 2.0 * cfg.h0 - h).collect(),
    };
    let mut log_q = vec![q0.ln()];
    let mut additive = Vec::new();
    for n in 0..n_max {
        let gap = cfg.beta(n)? - cfg.m_term(n)?;
        let la = 3f64.ln() - gap * gap;
        additive.push(la.exp());
        let next = log_add(2.0 * log_q[n as usize], la);
        log_q.push(next);
    }
    Ok(GenericTrace { direction, levels, q: log_q.iter().map(|l| l.exp()).collect(), log_q, additive })
}

/// Monte Carlo frequency of the level-0 crossing event: `B_{0,0}` (side
/// `L0`) joined to the boundary of `B̃_{0,0}` (side `3L0`) in `{φ ≥ h0}`, with
/// a zero-boundary margin of `margin` sites around `B̃_{0,0}`.
pub fn p0_monte_carlo(cfg: &RenormConfig, margin: u64, n: u64, seed: u64) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let d = cfg.d;
    let l = cfg.big_l0 as i64;
    let inner = LatticeBox::attached(&Point::origin(d), cfg.big_l0);
    let outer = LatticeBox::attached(&Point::new(vec![-l; d]), 3 * cfg.big_l0);
    let sampler = SpectralSampler::new(outer.enlarge(margin));
    let key = StreamKey::new(seed, experiment::RENORM_SEED).child(cfg.big_l0);
    let hits: u64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let f = sampler.sample(&key, i);
            crossing_level(&f, &inner, &outer, cfg.h0).map(|c| (cfg.h0 <= c) as u64)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(McEstimate::bernoulli(hits, n, seed).with_meta("h0", cfg.h0).with_meta("L0", cfg.big_l0))
}

/// `log` of the exact scale `L_n`.
pub fn log_scale(cfg: &RenormConfig, n: u32) -> f64 {
    ln_big(&cfg.scale(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renorm::ConstantsLedger;

    fn unit(d: usize) -> RenormConfig {
        RenormConfig::new(d, 10, 100, 1.0, ConstantsLedger::unit(d).unwrap()).unwrap()
    }

    #[test]
    fn beta_dominates_condition() {
        let cfg = unit(3);
        let b = beta_sequence(&cfg, 40).unwrap();
        for (n, v) in b.iter().enumerate() {
            assert!(*v >= 2f64.ln().sqrt() + cfg.m_term(n as u32).unwrap());
            assert!(*v > 0.0);
        }
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        for n in 1..40 {
            assert!(b[n + 1] <= 2.0 * b[n]);
        }
        let c = b.iter().enumerate().map(|(n, v)| v / 2f64.powi(n as i32 + 1)).fold(0.0, f64::max);
        assert!(b.iter().enumerate().all(|(n, v)| *v <= c * 2f64.powi(n as i32 + 1) + 1e-12));
    }

    #[test]
    fn h_infinity_matches_direct_sum() {
        let cfg = unit(3);
        let hs = h_sequence(&cfg, 10).unwrap();
        // second implementation, straight from the closed form of β_n
        let (d, big_l0, l0) = (3.0f64, 10.0f64, 100.0f64);
        let b = 3.0 / (1.0 - (-1.0f64).exp());
        let k0 = (2.0 * l0.powf(2.0 * (d - 1.0))).ln() + b;
        let mut h = 1.0;
        for n in 0..200 {
            let nf = n as f64;
            let beta = 2f64.ln().sqrt()
                + (2f64.powf(nf) * (3.0 * big_l0).powf(d)).ln().sqrt()
                + 2f64.powf((nf + 1.0) / 2.0) * (nf.sqrt() + k0.sqrt());
            h += beta * (2.0 * l0.powf(-(d - 2.0))).powf(nf + 1.0);
        }
        assert!((hs.h_infinity - h).abs() <= 1e-12, "{} vs {h}", hs.h_infinity);
        assert!(hs.values.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_c1_freezes_levels() {
        let mut l = ConstantsLedger::unit(3).unwrap();
        l.set("c1", 0.0, crate::renorm::Provenance::UserSupplied, "test");
        let cfg = RenormConfig::new(3, 10, 100, 0.7, l).unwrap();
        assert_eq!(h_sequence(&cfg, 5).unwrap().h_infinity, 0.7);
    }

    #[test]
    fn k_stays_in_band() {
        for d in [3usize, 5, 8] {
            let cfg = unit(d);
            let ks = k_sequence(&cfg, 30).unwrap();
            let b = cfg.ledger.get("B").unwrap();
            assert!(ks.values.iter().all(|&k| k <= ks.k0 && k >= ks.k0 - b));
            assert!(ks.subtracted <= b);
        }
    }

    #[test]
    fn additive_term_matches_lower_estimate() {
        let cfg = unit(3);
        let k0 = cfg.k0().unwrap();
        let t = generic_recursion(&cfg, 0.0, Monotonicity::Increasing, 20).unwrap();
        for (n, a) in t.additive.iter().enumerate() {
            let nf = n as f64;
            let cap = 3.0 * (-(2f64.ln()) - 2f64.powf(nf + 1.0) * (nf + k0)).exp();
            assert!(*a <= cap * (1.0 + 1e-12));
        }
        assert!(t.log_q.iter().skip(1).all(|q| q.is_finite()));
    }

    #[test]
    fn seed_gate() {
        let cfg = unit(3);
        let k0 = cfg.k0().unwrap();
        let at = certify_from_seed(&cfg, (-k0).exp(), SeedSource::Given, 12).unwrap();
        assert!(at.valid);
        for (lp, target) in at.log_pn_bound.iter().zip(&at.log_pn_target) {
            assert!(*lp <= *target + 1e-9 * target.abs());
        }
        let over = certify_from_seed(&cfg, 2.0 * (-k0).exp(), SeedSource::Given, 12).unwrap();
        assert!(!over.valid);
        assert!(over.pn_bound.is_empty());
        assert_eq!(over.provenance.certificate, "none");
        let zero = certify_from_seed(&cfg, 0.0, SeedSource::MonteCarlo { n: 10, seed: 1 }, 12).unwrap();
        assert!(zero.valid);
        assert_eq!(zero.provenance.certificate, "empirical");
    }

    #[test]
    fn generic_matches_certified_trace() {
        let cfg = unit(4);
        let p0 = (-cfg.k0().unwrap()).exp() * 0.5;
        let tr = certify_from_seed(&cfg, p0, SeedSource::Given, 8).unwrap();
        let g = generic_recursion(&cfg, p0, Monotonicity::Increasing, 8).unwrap();
        assert_eq!(g.log_q, tr.log_pn_bound);
        let q1 = p0 * p0 + 3.0 * (-(tr.beta_n[0] - tr.m_n[0]).powi(2)).exp();
        assert!((g.q[1] - q1).abs() <= 1e-12 * q1);
        let dec = generic_recursion(&cfg, p0, Monotonicity::Decreasing, 8).unwrap();
        assert!(dec.levels.windows(2).all(|w| w[1] <= w[0]) && dec.levels[1] < dec.levels[0]);
        assert_eq!(dec.q, g.q);
    }

    #[test]
    fn p0_bound_shape() {
        let mut cfg = unit(3);
        cfg.h0 = 3.0;
        assert!(p0_upper_bound(&cfg).is_err());
        let mut prev = 1.0;
        for h in [7.0, 8.0, 10.0, 14.0] {
            cfg.h0 = h;
            let b = p0_upper_bound(&cfg).unwrap();
            assert!(b.bound > 0.0 && b.bound < prev);
            assert_eq!(b.sites.round(), 27000.0);
            prev = b.bound;
        }
    }

    #[test]
    fn large_seed_level_validates() {
        let mut cfg = unit(3);
        cfg.h0 = 40.0;
        let p0 = p0_upper_bound(&cfg).unwrap().bound;
        assert!(certify_from_seed(&cfg, p0, SeedSource::Analytic, 10).unwrap().valid);
    }

    #[test]
    fn decay_exponent() {
        let tr = certify_from_seed(&unit(3), 0.0, SeedSource::Given, 1).unwrap();
        assert!((tr.rho - 0.150_515).abs() < 1e-6);
    }

    #[test]
    fn monte_carlo_seed_extremes() {
        let l = ConstantsLedger::unit(3).unwrap();
        let low = RenormConfig::new(3, 2, 100, -1e9, l.clone()).unwrap();
        let high = RenormConfig::new(3, 2, 100, 1e9, l).unwrap();
        assert_eq!(p0_monte_carlo(&low, 2, 20, 1).unwrap().value, 1.0);
        assert_eq!(p0_monte_carlo(&high, 2, 20, 1).unwrap().value, 0.0);
    }

}
