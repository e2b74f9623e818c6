//! Renormalization arithmetic: scales, tree counts, the `(β_n, h_n, K_n)`
//! recursions, seed bounds and the high-dimension slab pipeline.

pub mod ledger;
pub mod recursion;
pub mod slab;
pub mod trees;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ledger::{b_constant, Constant, ConstantsLedger, Provenance};
pub use recursion::{
    beta_sequence, certify_from_seed, generic_recursion, h_sequence, k_sequence, p0_monte_carlo, p0_upper_bound, GenericTrace,
    HSequence, KSequence, Monotonicity, P0Bound, RecursionTrace, SeedSource,
};
pub use slab::{peierls_sum, peierls_tail, slab_condition, slab_pipeline, vtilde, xi_tail_bound, SlabReport};
pub use trees::{descendant_counts, descendant_counts_brute, labeled_tree_count, tree_counts, TreeCounts};

/// Natural log of a big integer.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 900;
    let top: BigUint = x >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * 2f64.ln()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenormConfig {
    pub d: usize,
    /// Finest scale `L0`.
    #[serde(rename = "L0")]
    pub big_l0: u64,
    /// Ratio `l0` between consecutive scales.
    pub l0: u64,
    pub h0: f64,
    pub ledger: ConstantsLedger,
}

impl RenormConfig {
    pub fn new(d: usize, big_l0: u64, l0: u64, h0: f64, ledger: ConstantsLedger) -> Result<Self> {
        if d < 3 {
            return Err(Error::UnsupportedDimension { d, reason: "the scheme needs d ≥ 3" });
        }
        if big_l0 < 1 {
            return Err(Error::Config("L0 must be at least 1".into()));
        }
        if l0 < 100 {
            return Err(Error::Config(format!("l0 = {l0} is below 100")));
        }
        if !h0.is_finite() {
            return Err(Error::Config("h0 must be finite".into()));
        }
        ledger.validate()?;
        Ok(RenormConfig { d, big_l0, l0, h0, ledger })
    }

    /// Configuration with the ledger's working defaults.
    pub fn with_defaults(d: usize, big_l0: u64, l0: u64, h0: f64) -> Result<Self> {
        if l0 < 100 {
            return Err(Error::Config(format!("l0 = {l0} is below 100")));
        }
        Self::new(d, big_l0, l0, h0, ConstantsLedger::defaults(d, big_l0, l0)?)
    }

    /// `L_n = l0^n L0`, exact.
    pub fn scale(&self, n: u32) -> BigUint {
        scales(self.big_l0, self.l0, n)
    }

    /// `K0 = log(2 c0 l0^{2(d-1)}) + B`
    pub fn k0(&self) -> Result<f64> {
        let c0 = self.ledger.get("c0")?;
        let b = self.ledger.get("B")?;
        Ok((2.0 * c0).ln() + 2.0 * (self.d as f64 - 1.0) * (self.l0 as f64).ln() + b)
    }

    /// `M(n, L0) = c2 (log(2^n (3L0)^d))^{1/2}`
    pub fn m_term(&self, n: u32) -> Result<f64> {
        let c2 = self.ledger.get("c2")?;
        Ok(c2 * (n as f64 * 2f64.ln() + self.d as f64 * (3.0 * self.big_l0 as f64).ln()).sqrt())
    }

    /// `β_n = (log 2)^{1/2} + M(n, L0) + 2^{(n+1)/2}(n^{1/2} + K0^{1/2})`
    pub fn beta(&self, n: u32) -> Result<f64> {
        let nf = n as f64;
        Ok(2f64.ln().sqrt() + self.m_term(n)? + 2f64.powf((nf + 1.0) / 2.0) * (nf.sqrt() + self.k0()?.sqrt()))
    }

    /// `h_{n+1} - h_n = c1 β_n (2 l0^{-(d-2)})^{n+1}`
    pub fn increment(&self, n: u32) -> Result<f64> {
        let c1 = self.ledger.get("c1")?;
        if c1 == 0.0 {
            return Ok(0.0);
        }
        let log_ratio = 2f64.ln() - (self.d as f64 - 2.0) * (self.l0 as f64).ln();
        Ok((c1.ln() + self.beta(n)?.ln() + (n as f64 + 1.0) * log_ratio).exp())
    }
}

/// `L_n = l0^n L0` as an exact integer.
pub fn scales(big_l0: u64, l0: u64, n: u32) -> BigUint {
    let mut s = BigUint::one() * big_l0;
    for _ in 0..n {
        s *= l0;
    }
    s
}
