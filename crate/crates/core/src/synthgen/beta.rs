//! Beta distribution helpers on top of the regularized incomplete beta function.

use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::erfc;

/// Absolute tolerance on the returned quantile.
pub const QUANTILE_TOL: f64 = 1e-10;

pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta_reg(a, b, x)
    }
}

/// Inverse distribution function of Beta(a, b): Newton steps safeguarded by
/// a shrinking bracket on `[0, 1]`.
pub fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let log_norm = ln_beta(a, b);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = (a / (a + b)).clamp(1e-300, 1.0 - 1e-16);
    for _ in 0..400 {
        let f = beta_reg(a, b, x) - p;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo < QUANTILE_TOL {
            return 0.5 * (lo + hi);
        }
        let log_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - log_norm;
        let step = f / log_pdf.exp();
        let next = x - step;
        if next.is_finite() && next > lo && next < hi {
            if step.abs() < 1e-13 {
                return next;
            }
            x = next;
        } else {
            x = 0.5 * (lo + hi);
        }
    }
    x
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        for &(a, b) in &[(1.0, 1.0), (2.5, 7.0), (0.3, 0.4), (50.0, 51.0), (0.0005, 100.0), (99.9, 0.1)] {
            for k in 1..100 {
                let p = k as f64 / 100.0;
                let x = beta_quantile(p, a, b);
                assert!((0.0..=1.0).contains(&x));
                // Either the cdf matches or x is pinned within tolerance of the root.
                let close = (beta_cdf(x, a, b) - p).abs() < 1e-8
                    || (beta_cdf((x - QUANTILE_TOL).max(0.0), a, b) <= p && beta_cdf((x + QUANTILE_TOL).min(1.0), a, b) >= p);
                assert!(close, "a={a} b={b} p={p} x={x}");
            }
        }
    }

    #[test]
    fn uniform_quantile_is_identity() {
        for k in 0..=20 {
            let p = k as f64 / 20.0;
            assert!((beta_quantile(p, 1.0, 1.0) - p).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_median() {
        assert!((beta_quantile(0.5, 3.0, 3.0) - 0.5).abs() < 1e-9);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-9);
    }
}
