//! Counting the binary trees `Λ_{n,x}` of the renormalization scheme.
//!
//! A node `(k, y)` picks one descendant among the level `k-1` boxes of `B_{k,y}`
//! touching its inner boundary (`H1`) and one among the level `k-1` boxes
//! meeting the shell at `l∞` distance `[L_k/2]` from `B_{k,y}` (`H2`). Both
//! sets are products over coordinates minus a smaller product, so their sizes
//! have the form `a^d - b^d`.

use num_bigint::BigUint;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescendantCounts {
    pub level: u32,
    pub h1: BigUint,
    pub h2: BigUint,
}

fn side(big_l0: u64, l0: u64, level: u32) -> Result<i128> {
    let mut s = big_l0 as i128;
    for _ in 0..level {
        s = s.checked_mul(l0 as i128).filter(|v| *v < 1 << 100).ok_or_else(|| {
            Error::InvalidArgument(format!("scale l0^{level} L0 is too large for coordinate arithmetic"))
        })?;
    }
    Ok(s)
}

/// Per coordinate: the number of level `k-1` blocks with some site at
/// distance `≤ D` from `[0, l0 s)` and the number with every site at
/// distance `< D`, where `s = L_{k-1}` and `D = [L_k / 2]`.
fn shell_factors(big_l0: u64, l0: u64, level: u32) -> Result<(u64, u64)> {
    let s = side(big_l0, l0, level - 1)?;
    let len = s * l0 as i128;
    let dd = len / 2;
    let dist = |t: i128| 0.max(-t).max(t - (len - 1));
    let (mut a, mut b) = (0u64, 0u64);
    let first = -(dd / s) - 2;
    let last = l0 as i128 + dd / s + 2;
    for j in first..=last {
        let (lo_t, hi_t) = (j * s, j * s + s - 1);
        let lo = if hi_t >= 0 && lo_t < len { 0 } else { dist(lo_t).min(dist(hi_t)) };
        let hi = dist(lo_t).max(dist(hi_t));
        if lo <= dd {
            a += 1;
        }
        if hi < dd {
            b += 1;
        }
    }
    Ok((a, b))
}

/// `|H1(k, x)|` and `|H2(k, x)|`; both are independent of `x`.
pub fn descendant_counts(d: usize, big_l0: u64, l0: u64, level: u32) -> Result<DescendantCounts> {
    if level == 0 || big_l0 == 0 || l0 < 3 || d == 0 {
        return Err(Error::InvalidArgument("need level ≥ 1, L0 ≥ 1, l0 ≥ 3".into()));
    }
    let pow = |v: u64| Pow::pow(BigUint::from(v), d as u32);
    let h1 = pow(l0) - pow(l0 - 2);
    let (a, b) = shell_factors(big_l0, l0, level)?;
    Ok(DescendantCounts { level, h1, h2: pow(a) - pow(b) })
}

/// `|H1|` and `|H2|` by scanning every site of every candidate block.
pub fn descendant_counts_brute(d: usize, big_l0: u64, l0: u64, level: u32, cap: u64) -> Result<DescendantCounts> {
    if level == 0 || big_l0 == 0 || l0 < 3 || d == 0 {
        return Err(Error::InvalidArgument("need level ≥ 1, L0 ≥ 1, l0 ≥ 3".into()));
    }
    let s = side(big_l0, l0, level - 1)? as i64;
    let len = s * l0 as i64;
    let dd = len / 2;
    let reach = dd / s + 2;
    let per_axis = (l0 as i64 + 2 * reach + 1) as u64;
    let work = (per_axis as f64 * s as f64).powi(d as i32);
    if work > cap as f64 {
        return Err(Error::EnumerationCap(format!("{work:.3e} site visits exceed the cap {cap}")));
    }
    let dist = |t: i64| 0.max(-t).max(t - (len - 1));
    let inner_boundary = |z: &[i64]| z.iter().all(|&t| (0..len).contains(&t)) && z.iter().any(|&t| t == 0 || t == len - 1);
    let (mut h1, mut h2) = (0u64, 0u64);
    let mut block = vec![-reach; d];
    loop {
        let mut site = vec![0i64; d];
        let (mut in_h1, mut in_h2) = (false, false);
        let inside = block.iter().all(|&j| (0..l0 as i64).contains(&j));
        'sites: loop {
            let z: Vec<i64> = block.iter().zip(&site).map(|(j, o)| j * s + o).collect();
            in_h1 |= inside && inner_boundary(&z);
            in_h2 |= z.iter().map(|&t| dist(t)).max().unwrap() == dd;
            for a in 0..d {
                site[a] += 1;
                if site[a] < s {
                    continue 'sites;
                }
                site[a] = 0;
            }
            break;
        }
        h1 += in_h1 as u64;
        h2 += in_h2 as u64;
        let mut a = 0;
        loop {
            if a == d {
                return Ok(DescendantCounts { level, h1: h1.into(), h2: h2.into() });
            }
            block[a] += 1;
            if block[a] <= l0 as i64 + reach {
                break;
            }
            block[a] = -reach;
            a += 1;
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeCounts {
    pub n: u32,
    /// `log((c0 l0^{2(d-1)})^{2^n})`
    pub log_bound: f64,
    /// Number of labeled trees, when computed.
    pub exact: Option<String>,
    pub log_exact: Option<f64>,
    pub within_bound: Option<bool>,
}

/// Labeled trees of depth `n`: `N_0 = 1`, `N_k = |H1(k)| |H2(k)| N_{k-1}^2`.
pub fn labeled_tree_count(d: usize, big_l0: u64, l0: u64, n: u32) -> Result<BigUint> {
    let mut count = BigUint::one();
    for k in 1..=n {
        let c = descendant_counts(d, big_l0, l0, k)?;
        count = &c.h1 * &c.h2 * &count * &count;
    }
    Ok(count)
}

/// Bound `(c0 l0^{2(d-1)})^{2^n}` and, for `n ≤ exact_upto`, the exact
/// count with descendant sets checked by brute force against `cap`.
pub fn tree_counts(d: usize, big_l0: u64, l0: u64, n: u32, c0: f64, exact_upto: u32, cap: u64) -> Result<TreeCounts> {
    if c0 < 1.0 {
        return Err(Error::InvalidArgument("c0 must be at least 1".into()));
    }
    let log_bound = 2f64.powi(n as i32) * (c0.ln() + 2.0 * (d as f64 - 1.0) * (l0 as f64).ln());
    if n > exact_upto {
        return Ok(TreeCounts { n, log_bound, exact: None, log_exact: None, within_bound: None });
    }
    for k in 1..=n {
        let brute = descendant_counts_brute(d, big_l0, l0, k, cap)?;
        let fast = descendant_counts(d, big_l0, l0, k)?;
        if brute != fast {
            return Err(Error::ToleranceNotMet(format!("descendant counts disagree at level {k}")));
        }
    }
    let exact = labeled_tree_count(d, big_l0, l0, n)?;
    let log_exact = super::ln_big(&exact);
    Ok(TreeCounts {
        n,
        log_bound,
        exact: Some(exact.to_string()),
        log_exact: Some(log_exact),
        within_bound: Some(log_exact <= log_bound * (1.0 + 1e-12)),
    })
}
