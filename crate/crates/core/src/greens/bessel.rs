//! Exponentially scaled modified Bessel functions `e^{-z} I_n(z)` of integer
//! order.
//!
//! Small and moderate arguments use Miller's backward recurrence normalized
//! by `I_0 + 2 Σ I_k = e^z`; large arguments use the Hankel asymptotic series.

const RESCALE_AT: f64 = 1e250;

/// Argument beyond which the asymptotic series is used for order `n`.
pub fn asymptotic_threshold(n: u64) -> f64 {
    let n = n as f64;
    (n * n).max(50.0)
}

/// `e^{-z} I_n(z)` for `z ≥ 0`.
pub fn scaled_bessel_i(n: u64, z: f64) -> f64 {
    assert!(z >= 0.0 && z.is_finite(), "argument must be finite and non-negative");
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if z >= asymptotic_threshold(n) {
        asymptotic(n, z)
    } else {
        miller(n, z)
    }
}

fn miller(n: u64, z: f64) -> f64 {
    let start = n + 50 + (12.0 * z.sqrt()).ceil() as u64;
    let two_over_z = 2.0 / z;
    let mut above = 0.0; // I_{k+1}
    let mut cur = 1e-300; // I_k, arbitrary normalization
    let mut sum = 0.0; // 2 Σ_{j ≥ k, j ≥ 1} I_j
    let mut at_n = 0.0;
    let mut k = start;
    loop {
        if k == n {
            at_n = cur;
        }
        if k == 0 {
            sum += cur;
            break;
        }
        sum += 2.0 * cur;
        let below = (k as f64) * two_over_z * cur + above;
        above = cur;
        cur = below;
        k -= 1;
        if cur.abs() > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            cur *= s;
            above *= s;
            sum *= s;
            at_n *= s;
        }
    }
    at_n / sum
}

fn asymptotic(n: u64, z: f64) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut term = 1.0;
    let mut total = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (8.0 * k as f64 * z);
        if term == 0.0 {
            break;
        }
        if term.abs() >= last {
            break;
        }
        total += term;
        last = term.abs();
        if last < 1e-17 * total.abs() {
            break;
        }
    }
    total / (2.0 * std::f64::consts::PI * z).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        // e^{-z} I_n(z) from tabulated I_n values.
        assert_relative_eq!(scaled_bessel_i(0, 1.0), 1.266_065_877_752_008_4 * (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(scaled_bessel_i(1, 1.0), 0.565_159_103_992_485_1 * (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(scaled_bessel_i(2, 1.0), 0.135_747_669_767_038_3 * (-1.0f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(scaled_bessel_i(0, 10.0), 2_815.716_628_466_254 * (-10.0f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(scaled_bessel_i(3, 10.0), 1_758.380_716_610_853 * (-10.0f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn branches_agree_at_threshold() {
        for n in [0u64, 1, 2, 5, 8] {
            let z = asymptotic_threshold(n);
            let a = asymptotic(n, z * 1.01);
            let m = miller(n, z * 1.01);
            assert_relative_eq!(a, m, max_relative = 1e-12);
        }
    }

    #[test]
    fn normalization_identity() {
        for z in [0.01, 0.7, 3.0, 25.0, 120.0, 900.0] {
            let kmax = 60 + (14.0 * f64::sqrt(z)) as u64;
            let s: f64 = scaled_bessel_i(0, z) + 2.0 * (1..kmax).map(|k| scaled_bessel_i(k, z)).sum::<f64>();
            assert_relative_eq!(s, 1.0, max_relative = 1e-12);
        }
    }
}
