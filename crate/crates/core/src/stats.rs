//! Monte Carlo estimates and small statistical helpers.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// A Monte Carlo result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
    pub n: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub meta: Vec<(String, String)>,
}

impl McEstimate {
    /// Bernoulli estimate from a success count.
    pub fn bernoulli(successes: u64, n: u64, seed: u64) -> Self {
        let p = if n == 0 { 0.0 } else { successes as f64 / n as f64 };
        McEstimate { value: p, se: bernoulli_se(p, n), n, seed, meta: Vec::new() }
    }

    /// Sample mean with its standard error.
    pub fn mean_of(xs: &[f64], seed: u64) -> Self {
        let (m, v) = mean_var(xs);
        McEstimate { value: m, se: (v / xs.len().max(1) as f64).sqrt(), n: xs.len() as u64, seed, meta: Vec::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }
}

pub fn bernoulli_se(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Mean and unbiased variance, summed in slice order.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (m, v)
}

/// Standard normal upper tail `P[Z ≥ z]`.
pub fn normal_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Sample covariance of paired observations and the standard error of that
/// estimate, using the fourth-moment formula.
pub fn covariance_with_se(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let (c, v) = mean_var(&prods);
    let cov = c * n / (n - 1.0);
    (cov, (v / n).sqrt())
}
