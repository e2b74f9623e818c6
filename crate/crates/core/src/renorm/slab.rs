//! Tail bounds for `ξ`, the Peierls sum and the choice of `d0` for slab
//! percolation at a small positive level.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::greens::highdim_scalars;
use crate::stats::McEstimate;

/// `ṽ(u) = (2eu)^{1/2} e^{-u}`, which decreases from 1 on `(1/2, ∞)`.
pub fn vtilde(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    (0.5 * (2.0 * std::f64::consts::E * u).ln() - u).exp()
}

fn ln_vtilde(u: f64) -> f64 {
    0.5 * (2.0 * std::f64::consts::E * u).ln() - u
}

/// `ṽ(h²/(2 ρ))^{|A|}` with `ρ` the spectral bound of `G'` in dimension `d`:
/// a bound on `P[|ξ_x| > h for all x ∈ A]`.
pub fn xi_tail_bound(d: usize, h: f64, a_size: usize) -> Result<f64> {
    let rho = highdim_scalars(d)?.rho_bound;
    let u = h * h / (2.0 * rho);
    if u <= 0.5 {
        return Err(Error::RegimeNotApplicable(format!("h²/(2ρ) = {u:.4} must exceed 1/2 (d = {d}, h = {h})")));
    }
    Ok((a_size as f64 * ln_vtilde(u)).exp())
}

/// `8^n Σ_k C(n,k) 40^{-k} 40^{-(n-k)}`, exactly; equals `(2/5)^n < 2^{-n}`.
pub fn peierls_sum(n: u32) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let forty = BigRational::from_integer(BigInt::from(40));
    let mut sum = BigRational::zero();
    let mut binom = BigInt::one();
    for k in 0..=n {
        let term = BigRational::from_integer(binom.clone()) / num_traits::pow(forty.clone(), n as usize);
        sum += term;
        binom = binom * BigInt::from(n - k) / BigInt::from(k + 1);
    }
    let total = sum * num_traits::pow(BigRational::from_integer(BigInt::from(8)), n as usize);
    let half = num_traits::pow(BigRational::new(BigInt::one(), BigInt::from(2)), n as usize);
    if total >= half {
        return Err(Error::ToleranceNotMet(format!("Peierls sum at n = {n} is not below 2^-n")));
    }
    Ok(total)
}

/// `Σ_{n≥2} (2/5)^n = 4/15`.
pub fn peierls_tail() -> BigRational {
    let q = BigRational::new(BigInt::from(2), BigInt::from(5));
    &q * &q / (BigRational::one() - &q)
}

/// `log((2L0)^3 ṽ(h0²/(2ρ(d)))^{1/4})`, or `None` when `h0²/(2ρ(d)) ≤ 1/2`.
pub fn slab_condition(d: usize, h0: f64, big_l0: u64) -> Result<Option<f64>> {
    let rho = highdim_scalars(d)?.rho_bound;
    let u = h0 * h0 / (2.0 * rho);
    if u <= 0.5 {
        return Ok(None);
    }
    Ok(Some(3.0 * (2.0 * big_l0 as f64).ln() + 0.25 * ln_vtilde(u)))
}

fn holds(d: usize, h0: f64, big_l0: u64) -> Result<bool> {
    Ok(slab_condition(d, h0, big_l0)?.is_some_and(|l| l <= -(40f64.ln())))
}

pub const D_MAX: usize = 1_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlabGates {
    /// `½(½ + p_c^site)`, the target for `P[ψ⁰_0 ≥ 2h0]`.
    pub target_probability: f64,
    pub p_site: f64,
    /// The level with `P[ψ⁰_0 ≥ 2h] = ½(½ + p_c^site)`, `ψ⁰ ~ N(0, 1/2)`.
    pub implied_h0: f64,
    /// `P[ψ⁰_0 ≥ 2h0]` at the supplied `h0`.
    pub psi_tail_at_h0: f64,
    /// Required lower bound on the dominated Bernoulli parameter, `1 - 1/40`.
    pub domination_gate: f64,
    /// Both gates rest on an external domination theorem with no explicit
    /// form, so they are checked only empirically.
    pub status: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalChecks {
    /// Frequency of `ψ⁰_0 ≥ 2h0`.
    pub psi_tail: McEstimate,
    /// Frequency of the good-block event for `ψ⁰` alone.
    pub block_good: McEstimate,
    pub block_gate_met: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlabReport {
    pub h0: f64,
    #[serde(rename = "L0")]
    pub big_l0: u64,
    pub d0: usize,
    pub rho_bound_at_d0: f64,
    /// `(2L0)^3 ṽ(h0²/(2ρ))^{1/4}` at `d0` and `d0 - 1`.
    pub lhs_at_d0: f64,
    pub lhs_below_d0: Option<f64>,
    pub gates: SlabGates,
    pub empirical_checks: Option<EmpiricalChecks>,
}

/// Smallest `d ≥ 6` with `(2L0)^3 ṽ(h0²/(2ρ(d)))^{1/4} ≤ 1/40`, found by
/// doubling then bisection; `ρ(d)` decreases in `d`, so the condition is
/// monotone.
pub fn slab_pipeline(h0: f64, big_l0: u64, p_site: f64) -> Result<SlabReport> {
    if !(h0 > 0.0) || big_l0 == 0 {
        return Err(Error::InvalidArgument("need h0 > 0 and L0 ≥ 1".into()));
    }
    if !(0.0..0.5).contains(&p_site) {
        return Err(Error::InvalidArgument(format!("p_c^site = {p_site} must lie in [0, 1/2)")));
    }
    let d0 = if holds(6, h0, big_l0)? {
        6
    } else {
        let (mut lo, mut hi) = (6usize, 12usize);
        while !holds(hi, h0, big_l0)? {
            if hi >= D_MAX {
                return Err(Error::RegimeNotApplicable(format!(
                    "h0 = {h0} is too small for L0 = {big_l0}: no d ≤ {D_MAX} works"
                )));
            }
            lo = hi;
            hi = (2 * hi).min(D_MAX);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if holds(mid, h0, big_l0)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let lhs = |d: usize| -> Result<Option<f64>> { Ok(slab_condition(d, h0, big_l0)?.map(f64::exp)) };
    let half_sd = 0.5f64.sqrt();
    let psi = Normal::new(0.0, half_sd).unwrap();
    let target = 0.5 * (0.5 + p_site);
    Ok(SlabReport {
        h0,
        big_l0,
        d0,
        rho_bound_at_d0: highdim_scalars(d0)?.rho_bound,
        lhs_at_d0: lhs(d0)?.unwrap(),
        lhs_below_d0: if d0 > 6 { lhs(d0 - 1)? } else { None },
        gates: SlabGates {
            target_probability: target,
            p_site,
            implied_h0: psi.inverse_cdf(1.0 - target) / 2.0,
            psi_tail_at_h0: 1.0 - psi.cdf(2.0 * h0),
            domination_gate: 1.0 - 1.0 / 40.0,
            status: "unverified-analytic".into(),
        },
        empirical_checks: None,
    })
}

/// Monte Carlo counterparts of the two gates for `ψ⁰` on one block.
pub fn empirical_checks(h0: f64, big_l0: u64, n: u64, seed: u64) -> Result<EmpiricalChecks> {
    let (psi_tail, block_good) = crate::perc::blocks::psi_block_probability(h0, big_l0, n, seed)?;
    let block_gate_met = block_good.value >= 1.0 - 1.0 / 40.0;
    Ok(EmpiricalChecks { psi_tail, block_good, block_gate_met })
}
