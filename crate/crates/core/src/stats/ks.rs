//! One-sample Kolmogorov–Smirnov machinery against the standard normal.

use statrs::function::erf::erfc;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `sup_x |F_n(x) − F(x)|` for a sample sorted in ascending order.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// CDF of the limiting Kolmogorov distribution,
/// `K(x) = 1 − 2 ∑_{k≥1} (−1)^{k−1} exp(−2k²x²)`.
///
/// For small `x` the alternating series converges slowly, so the Jacobi
/// form `√(2π)/x ∑_{k≥1} exp(−(2k−1)²π²/(8x²))` is used instead.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        let mut sum = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            sum += (-(m * m) * PI * PI / (8.0 * x * x)).exp();
        }
        (2.0 * PI).sqrt() / x * sum
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * (-2.0 * kf * kf * x * x).exp();
        }
        1.0 - 2.0 * sum
    }
}

/// `c` with `K(c) = p`, by bisection.
pub fn kolmogorov_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability {p} outside (0, 1)");
    let (mut lo, mut hi) = (0.05, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
