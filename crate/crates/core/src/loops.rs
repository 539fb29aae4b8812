//! The loop `p ↦ v(p) = (a(p), b(p))` that parametrizes `K(p) = a(p)K₁ + b(p)K₂`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite trigonometric series `Σ_k cos_k·cos(kp) + sin_k·sin(kp)` with complex
/// coefficients. `sin[0]` is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FourierSeries {
    #[serde(default)]
    pub cos: Vec<Complex64>,
    #[serde(default)]
    pub sin: Vec<Complex64>,
}

impl FourierSeries {
    pub fn eval(&self, p: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.cos.iter().enumerate() {
            acc += c * (k as f64 * p).cos();
        }
        for (k, s) in self.sin.iter().enumerate().skip(1) {
            acc += s * (k as f64 * p).sin();
        }
        acc
    }

    pub fn derivative(&self, p: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.cos.iter().enumerate().skip(1) {
            acc -= c * (k as f64 * (k as f64 * p).sin());
        }
        for (k, s) in self.sin.iter().enumerate().skip(1) {
            acc += s * (k as f64 * (k as f64 * p).cos());
        }
        acc
    }

    /// [`eval`](Self::eval) continued to complex `p`.
    pub fn eval_complex(&self, p: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.cos.iter().enumerate() {
            acc += c * (p * k as f64).cos();
        }
        for (k, s) in self.sin.iter().enumerate().skip(1) {
            acc += s * (p * k as f64).sin();
        }
        acc
    }

    pub fn derivative_complex(&self, p: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.cos.iter().enumerate().skip(1) {
            acc -= c * (p * k as f64).sin() * k as f64;
        }
        for (k, s) in self.sin.iter().enumerate().skip(1) {
            acc += s * (p * k as f64).cos() * k as f64;
        }
        acc
    }

    fn is_real(&self) -> bool {
        self.cos.iter().chain(self.sin.iter().skip(1)).all(|c| c.im == 0.0)
    }
}

/// The two periodic coefficient functions of the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LoopFunctions {
    /// `a = cos p`, `b = sin p`.
    Trig,
    Fourier { a: FourierSeries, b: FourierSeries },
}

impl Default for LoopFunctions {
    fn default() -> Self {
        Self::Trig
    }
}

/// `(a, b, a′, b′)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopPoint {
    pub a: Complex64,
    pub b: Complex64,
    pub da: Complex64,
    pub db: Complex64,
}

impl LoopFunctions {
    pub fn is_trig(&self) -> bool {
        matches!(self, Self::Trig)
    }

    pub fn at(&self, p: f64) -> LoopPoint {
        match self {
            Self::Trig => {
                let (s, c) = p.sin_cos();
                LoopPoint {
                    a: c.into(),
                    b: s.into(),
                    da: (-s).into(),
                    db: c.into(),
                }
            }
            Self::Fourier { a, b } => LoopPoint {
                a: a.eval(p),
                b: b.eval(p),
                da: a.derivative(p),
                db: b.derivative(p),
            },
        }
    }

    /// [`at`](Self::at) continued off the real axis.
    pub fn at_complex(&self, p: Complex64) -> LoopPoint {
        match self {
            Self::Trig => {
                let (s, c) = (p.sin(), p.cos());
                LoopPoint { a: c, b: s, da: -s, db: c }
            }
            Self::Fourier { a, b } => LoopPoint {
                a: a.eval_complex(p),
                b: b.eval_complex(p),
                da: a.derivative_complex(p),
                db: b.derivative_complex(p),
            },
        }
    }

    /// `v(p) = (a(p), b(p))`.
    pub fn v(&self, p: f64) -> [Complex64; 2] {
        let pt = self.at(p);
        [pt.a, pt.b]
    }

    /// `κ(p) = a(p)/b(p)`; a pole where `b` vanishes.
    pub fn kappa(&self, p: f64) -> Result<Complex64> {
        let pt = self.at(p);
        let scale = pt.a.norm().max(pt.b.norm());
        if pt.b.norm() <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Pole { p });
        }
        Ok(pt.a / pt.b)
    }

    /// `κ′(p) = (a′b − ab′)/b²`.
    pub fn kappa_derivative(&self, p: f64) -> Result<Complex64> {
        let pt = self.at(p);
        if pt.b.norm() <= 1e-15 * pt.a.norm().max(pt.b.norm()).max(f64::MIN_POSITIVE) {
            return Err(Error::Pole { p });
        }
        Ok((pt.da * pt.b - pt.a * pt.db) / (pt.b * pt.b))
    }

    /// Whether `v*(p) = v(−p)` holds on a uniform grid (required for CII).
    pub fn is_time_reversal_symmetric(&self, grid: usize, tol: f64) -> bool {
        match self {
            Self::Trig => true,
            Self::Fourier { a, b } => {
                // Exact for real coefficients: v(−p) flips only the sine terms.
                if a.is_real() && b.is_real() {
                    let odd_free = |f: &FourierSeries| f.sin.iter().skip(1).all(|c| *c == Complex64::new(0.0, 0.0));
                    if odd_free(a) && odd_free(b) {
                        return true;
                    }
                }
                (0..grid).all(|i| {
                    let p = std::f64::consts::TAU * i as f64 / grid as f64;
                    let vp = self.v(p);
                    let vm = self.v(-p);
                    (vp[0].conj() - vm[0]).norm() <= tol && (vp[1].conj() - vm[1]).norm() <= tol
                })
            }
        }
    }

    /// Minimum of `|a|² + |b|²` over a grid; zero means a common zero of `a` and `b`.
    pub fn min_norm_sqr(&self, grid: usize) -> f64 {
        (0..grid)
            .map(|i| {
                let v = self.v(std::f64::consts::TAU * i as f64 / grid as f64);
                v[0].norm_sqr() + v[1].norm_sqr()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

    fn sample_fourier() -> LoopFunctions {
        LoopFunctions::Fourier {
            a: FourierSeries { cos: vec![0.2.into(), 1.0.into(), Complex64::new(0.0, 0.3)], sin: vec![0.0.into(), 0.1.into()] },
            b: FourierSeries { cos: vec![0.0.into(), 0.0.into()], sin: vec![0.0.into(), 1.0.into(), 0.4.into()] },
        }
    }

    #[test]
    fn kappa_trig() {
        let l = LoopFunctions::Trig;
        assert!((l.kappa(FRAC_PI_4).unwrap() - 1.0).norm() < 1e-15);
        assert!(l.kappa(FRAC_PI_2).unwrap().norm() < 1e-15);
        assert!(matches!(l.kappa(0.0), Err(Error::Pole { .. })));
        assert!(matches!(l.kappa(PI), Err(Error::Pole { .. })));
        let p = 0.37;
        let d = l.kappa_derivative(p).unwrap();
        assert!((d + 1.0 / p.sin().powi(2)).norm() < 1e-13);
    }

    #[test]
    fn fourier_derivatives_match_differences() {
        let l = sample_fourier();
        for &p in &[0.1, 1.3, 4.0] {
            let h = 1e-5;
            let pt = l.at(p);
            let fa = (l.at(p + h).a - l.at(p - h).a) / (2.0 * h);
            let fb = (l.at(p + h).b - l.at(p - h).b) / (2.0 * h);
            assert!((pt.da - fa).norm() < 1e-8);
            assert!((pt.db - fb).norm() < 1e-8);
        }
    }

    #[test]
    fn complex_continuation_matches_real() {
        for l in [LoopFunctions::Trig, sample_fourier()] {
            for &p in &[0.3, 2.0, 5.1] {
                let (x, y) = (l.at(p), l.at_complex(Complex64::new(p, 0.0)));
                assert!((x.a - y.a).norm() < 1e-14 && (x.db - y.db).norm() < 1e-14);
            }
            // Cauchy–Riemann: d/dp along the imaginary direction.
            let p = Complex64::new(0.7, 0.2);
            let h = Complex64::new(0.0, 1e-6);
            let fd = (l.at_complex(p + h).a - l.at_complex(p - h).a) / (h * 2.0);
            assert!((fd - l.at_complex(p).da).norm() < 1e-8);
        }
    }

    #[test]
    fn periodic() {
        let l = sample_fourier();
        for i in 0..50 {
            let p = i as f64 * 0.13;
            let (x, y) = (l.at(p), l.at(p + TAU));
            assert!((x.a - y.a).norm() < 1e-12 && (x.b - y.b).norm() < 1e-12);
        }
    }

    #[test]
    fn time_reversal() {
        assert!(LoopFunctions::Trig.is_time_reversal_symmetric(64, 1e-12));
        // Complex cosine coefficient breaks v*(p) = v(−p).
        assert!(!sample_fourier().is_time_reversal_symmetric(64, 1e-12));
    }

    #[test]
    fn serde_roundtrip() {
        let l = sample_fourier();
        let s = serde_json::to_string(&l).unwrap();
        let back: LoopFunctions = serde_json::from_str(&s).unwrap();
        assert_eq!(l, back);
        let t: LoopFunctions = serde_json::from_str(r#"{"kind":"trig"}"#).unwrap();
        assert!(t.is_trig());
    }
}
