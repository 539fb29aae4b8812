//! Euler Beta, the regularized incomplete Beta function, and the normalized
//! inside/outside weights `u_m(N, q²)`, `v_m(N, q²)`.
//!
//! `u_m(N, q²) = 2/B(m, N−m+1) ∫₀^q ρ^{2m−1} (1+ρ²)^{−N−1} dρ`. The substitution
//! `s = ρ²/(1+ρ²)` turns this into `I_s(m, N−m+1)` with `s = q²/(1+q²)`, which is
//! what [`u_fn`] evaluates. [`u_fn_quadrature`] integrates the original form.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature;

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 20_000;

/// `ln B(x, y)`.
pub fn ln_beta(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!("Beta arguments must be positive, got ({x}, {y})")));
    }
    Ok(ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y))
}

/// Euler's Beta function, computed as `exp(ln B)`.
pub fn euler_beta(x: f64, y: f64) -> Result<f64> {
    ln_beta(x, y).map(f64::exp)
}

/// Modified Lentz evaluation of the incomplete-Beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return h;
        }
    }
    h
}

/// Returns `(I_x(a, b), 1 − I_x(a, b))`, taking `x` and `1 − x` separately so
/// that neither is formed by cancellation. The smaller tail is computed
/// directly and the other one as its complement.
pub fn beta_reg_pair(a: f64, b: f64, x: f64, one_minus_x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("incomplete Beta needs a, b > 0, got ({a}, {b})")));
    }
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&one_minus_x) {
        return Err(Error::Domain(format!("incomplete Beta argument {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if one_minus_x == 0.0 {
        return Ok((1.0, 0.0));
    }
    let ln_front = a * x.ln() + b * one_minus_x.ln() - ln_beta(a, b)?;
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = (ln_front - a.ln()).exp() * beta_cf(a, b, x);
        Ok((lower, 1.0 - lower))
    } else {
        let upper = (ln_front - b.ln()).exp() * beta_cf(b, a, one_minus_x);
        Ok((1.0 - upper, upper))
    }
}

/// Regularized incomplete Beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> Result<f64> {
    beta_reg_pair(a, b, x, 1.0 - x).map(|p| p.0)
}

/// The inside/outside weight pair for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPair {
    pub m: usize,
    pub n: usize,
    pub q2: f64,
    pub u: f64,
    pub v: f64,
}

fn check_mode(m: usize, n: usize, q2: f64) -> Result<()> {
    if m < 1 || m > n {
        return Err(Error::Domain(format!("mode index m = {m} outside 1..={n}")));
    }
    if q2.is_nan() || q2 < 0.0 {
        return Err(Error::Domain(format!("threshold q² = {q2} must be nonnegative")));
    }
    Ok(())
}

/// Both weights for mode `m` of an `N`-dimensional spherical ensemble at
/// squared radius `q2`.
pub fn beta_pair(m: usize, n: usize, q2: f64) -> Result<BetaPair> {
    check_mode(m, n, q2)?;
    let (u, v) = if q2.is_infinite() {
        (1.0, 0.0)
    } else {
        let s = q2 / (1.0 + q2);
        let one_minus_s = 1.0 / (1.0 + q2);
        beta_reg_pair(m as f64, (n - m + 1) as f64, s, one_minus_s)?
    };
    Ok(BetaPair { m, n, q2, u, v })
}

/// `u_m(N, q²)`: probability weight of mode `m` inside radius `q`.
pub fn u_fn(m: usize, n: usize, q2: f64) -> Result<f64> {
    beta_pair(m, n, q2).map(|p| p.u)
}

/// `v_m(N, q²) = 1 − u_m(N, q²)`.
pub fn v_fn(m: usize, n: usize, q2: f64) -> Result<f64> {
    beta_pair(m, n, q2).map(|p| p.v)
}

fn ln_integrand(m: usize, n: usize, ln_norm: f64, rho: f64) -> f64 {
    ln_norm + (2 * m - 1) as f64 * rho.ln() - (n + 1) as f64 * (rho * rho).ln_1p()
}

/// `u_m(N, q²)` by adaptive quadrature of the defining radial integral.
pub fn u_fn_quadrature(m: usize, n: usize, q2: f64) -> Result<f64> {
    check_mode(m, n, q2)?;
    if q2 == 0.0 {
        return Ok(0.0);
    }
    let ln_norm = std::f64::consts::LN_2 - ln_beta(m as f64, (n - m + 1) as f64)?;
    let f = |rho: f64| {
        if rho <= 0.0 {
            0.0
        } else {
            ln_integrand(m, n, ln_norm, rho).exp()
        }
    };
    let q = q2.sqrt();
    // Split at the integrand's mode so the peak is resolved for large N.
    let peak = ((2 * m - 1) as f64 / (2 * (n - m) + 3) as f64).sqrt();
    let v = if q <= peak {
        quadrature::integrate(f, 0.0, q, 1e-15).0
    } else {
        quadrature::integrate(f, 0.0, peak, 1e-15).0 + quadrature::integrate(f, peak, q, 1e-15).0
    };
    Ok(v)
}

/// `v_m(N, q²)` by quadrature of the tail integral from `q` to infinity.
pub fn v_fn_quadrature(m: usize, n: usize, q2: f64) -> Result<f64> {
    check_mode(m, n, q2)?;
    if q2 == 0.0 {
        return Ok(1.0);
    }
    let ln_norm = std::f64::consts::LN_2 - ln_beta(m as f64, (n - m + 1) as f64)?;
    // Under ρ = 1/t the tail integrand becomes 2/B · t^{2(N−m)+1} (1+t²)^{−N−1}.
    let f = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            (ln_norm + (2 * (n - m) + 1) as f64 * t.ln() - (n + 1) as f64 * (t * t).ln_1p()).exp()
        }
    };
    let upper = 1.0 / q2.sqrt();
    let peak = ((2 * (n - m) + 1) as f64 / (2 * m + 1) as f64).sqrt();
    let v = if upper <= peak {
        quadrature::integrate(f, 0.0, upper, 1e-15).0
    } else {
        quadrature::integrate(f, 0.0, peak, 1e-15).0
            + quadrature::integrate(f, peak, upper, 1e-15).0
    };
    Ok(v)
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n);
    ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64) - ln_gamma((n - k + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn beta_values() {
        assert!((euler_beta(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((euler_beta(2.0, 3.0).unwrap() - 1.0 / 12.0).abs() < 1e-14);
        // B(m, N−m+1) = 1/(N·C(N−1, m−1)); m=3, N=5 → 1/30
        assert!((euler_beta(3.0, 3.0).unwrap() - 1.0 / 30.0).abs() < 1e-14);
    }

    #[test]
    fn beta_large_arguments_no_overflow() {
        let lb = ln_beta(5000.0, 5001.0).unwrap();
        assert!(lb.is_finite() && lb < 0.0);
        assert_eq!(euler_beta(5000.0, 5001.0).unwrap(), lb.exp());
    }

    #[test]
    fn beta_domain_errors() {
        assert!(matches!(euler_beta(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(euler_beta(1.0, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn u_small_cases() {
        assert!((u_fn(1, 1, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((u_fn(1, 2, 1.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(u_fn(3, 7, 0.0).unwrap(), 0.0);
        assert_eq!(v_fn(3, 7, 0.0).unwrap(), 1.0);
        assert!((v_fn(1, 1, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(u_fn(2, 3, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn mode_domain_errors() {
        assert!(matches!(u_fn(0, 3, 1.0), Err(Error::Domain(_))));
        assert!(matches!(u_fn(4, 3, 1.0), Err(Error::Domain(_))));
        assert!(matches!(v_fn(1, 3, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn quadrature_matches_continued_fraction() {
        for &(m, n, q2) in &[(1, 1, 1.0), (1, 2, 1.0), (5, 5, 1.0), (3, 8, 0.25), (7, 12, 4.0)] {
            let u = u_fn(m, n, q2).unwrap();
            let uq = u_fn_quadrature(m, n, q2).unwrap();
            let vq = v_fn_quadrature(m, n, q2).unwrap();
            assert!((u - uq).abs() < 1e-12, "u({m},{n},{q2}) cf {u} quad {uq}");
            assert!((1.0 - u - vq).abs() < 1e-10, "v({m},{n},{q2})");
        }
    }

    #[test]
    fn quadrature_large_n() {
        for &(m, n) in &[(100, 200), (1000, 2000), (3, 500)] {
            let u = u_fn(m, n, 1.0).unwrap();
            let uq = u_fn_quadrature(m, n, 1.0).unwrap();
            assert!((u - uq).abs() < 1e-10, "N={n}, m={m}: {u} vs {uq}");
        }
    }

    #[test]
    fn reflection_by_quadrature() {
        for n in 1..=12 {
            for m in 1..=n {
                let u = u_fn_quadrature(m, n, 1.0).unwrap();
                let v = v_fn_quadrature(n + 1 - m, n, 1.0).unwrap();
                assert!((u - v).abs() < 1e-10);
                assert!((u_fn(m, n, 1.0).unwrap() - v_fn(n + 1 - m, n, 1.0).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn monotone_in_threshold() {
        for n in [1usize, 4, 17, 300] {
            for m in [1, n / 2 + 1, n] {
                let mut prev = 0.0;
                for i in 0..400 {
                    let q2 = (i as f64 * 0.05).powi(2);
                    let u = u_fn(m, n, q2).unwrap();
                    assert!(u >= prev - 1e-15, "N={n}, m={m}, q2={q2}");
                    prev = u;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn complement_identity(n in 1usize..3000, frac in 0.0f64..1.0, q2 in 0.0f64..50.0) {
            let m = 1 + ((n - 1) as f64 * frac) as usize;
            let p = beta_pair(m, n, q2).unwrap();
            prop_assert!((p.u + p.v - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&p.u));
            prop_assert!((0.0..=1.0).contains(&p.v));
        }
    }
}
