//! k-point winding-density correlators `C_k(p_1, …, p_k) = ⟨w(p_1)⋯w(p_k)⟩`:
//! Monte Carlo estimation over matrix draws, the closed two-point function
//! for the trig loop at β = 2, the `L` entries, and the unfolded two-point
//! function with its large-N limits.
//!
//! For the trig loop the density has the form
//! `w(p) = i Σ_n (ζ − c_n)/(ζ + c_n)` with `ζ = e^{2ip}` and
//! `c_n = (1 + i z_n)/(1 − i z_n)`. A real rotation of `(K₁, K₂)` leaves the
//! Gaussian ensembles invariant and shifts all `p_j` by a common angle, so
//! averaging a draw's product over common shifts is still an unbiased
//! estimate. [`Estimator::CircleAverage`] does that average in closed form by
//! residues, which removes most of the heavy tail of the plain product.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::ensembles::{draw, SphericalSpectrum, SymmetryClass};
use crate::error::{Error, Result};
use crate::loops::LoopFunctions;
use crate::mc::{run_streams, McPlan};
use crate::specfun::{beta_pair, ln_beta};
use crate::stats::{ComplexAccumulator, MedianOfMeans};
use crate::winding::winding_density_spectral_tol;

/// Draws with some `|κ(p_j) + z_n|` below this are skipped and counted.
pub const CORRELATOR_POLE_TOL: f64 = 1e-9;

/// Points closer than this to a zero of `b` are rejected.
pub const B_ZERO_MARGIN: f64 = 1e-3;

/// Below this value of `sin²Δ` the two-point function uses its Taylor series.
pub const C2_SERIES_SWITCH: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    /// Sample mean of `Π_j w(p_j)` over draws.
    #[default]
    Plain,
    /// Per draw, the mean of `Π_j w(p_j + θ_r)` over `shifts` equidistant
    /// `θ_r ∈ [0, π)`. Trig loop only.
    ShiftAverage { shifts: usize },
    /// Per draw, the exact average over all common shifts. Trig loop, k ≤ 2.
    CircleAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorConfig {
    pub n: usize,
    pub class: SymmetryClass,
    pub loop_fns: LoopFunctions,
    /// Each entry is one list of points `(p_1, …, p_k)`; all are estimated
    /// from the same draws.
    pub point_sets: Vec<Vec<f64>>,
    pub estimator: Estimator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    pub points: Vec<f64>,
    pub n: usize,
    pub class: SymmetryClass,
    pub mean: Complex64,
    /// Standard error of the real part.
    pub stderr: f64,
    pub stderr_im: f64,
    /// Median over the per-stream means.
    pub median_of_means: Option<Complex64>,
    pub trials: u64,
    pub skipped: u64,
    pub resamples: u64,
}

impl CorrelatorEstimate {
    pub fn skip_rate(&self) -> f64 {
        self.skipped as f64 / self.trials.max(1) as f64
    }

    /// Skip rate below `1e−3`.
    pub fn is_healthy(&self) -> bool {
        self.skip_rate() < 1e-3
    }
}

fn check_points(cfg: &CorrelatorConfig) -> Result<()> {
    if cfg.n == 0 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    let trig = cfg.loop_fns.is_trig();
    let scale = cfg.loop_fns.min_norm_sqr(256).sqrt().max(f64::MIN_POSITIVE);
    for pts in &cfg.point_sets {
        if pts.is_empty() {
            return Err(Error::Domain("a correlator needs at least one point".into()));
        }
        for (i, &p) in pts.iter().enumerate() {
            if pts[..i].iter().any(|&q| q == p) {
                return Err(Error::Domain(format!("points must be pairwise distinct, {p} repeats")));
            }
            if matches!(cfg.estimator, Estimator::Plain) && cfg.loop_fns.at(p).b.norm() < B_ZERO_MARGIN * scale {
                return Err(Error::Domain(format!("point {p} lies within {B_ZERO_MARGIN} of a zero of b")));
            }
        }
        if matches!(cfg.estimator, Estimator::CircleAverage) && pts.len() > 2 {
            return Err(Error::Domain("the circle average is implemented for k ≤ 2".into()));
        }
    }
    if !trig && !matches!(cfg.estimator, Estimator::Plain) {
        return Err(Error::Domain("shift averaging relies on the trig loop".into()));
    }
    if let Estimator::ShiftAverage { shifts } = cfg.estimator {
        if shifts == 0 {
            return Err(Error::Domain("shift average needs at least one shift".into()));
        }
    }
    Ok(())
}

fn product_at(spec: &SphericalSpectrum, lp: &LoopFunctions, pts: &[f64], shift: f64) -> Result<Complex64> {
    let mut prod = Complex64::new(1.0, 0.0);
    for &p in pts {
        prod *= winding_density_spectral_tol(spec, lp, p + shift, CORRELATOR_POLE_TOL)?;
    }
    Ok(prod)
}

/// Shifts `θ_r = π (r + ½)/M` that keep every point of every set at least
/// [`B_ZERO_MARGIN`] away from a multiple of `π`. Dropping a fixed shift does
/// not bias the average.
fn admissible_shifts(sets: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    sets.iter()
        .map(|pts| {
            (0..m)
                .map(|r| PI * (r as f64 + 0.5) / m as f64)
                .filter(|th| pts.iter().all(|p| (p + th).sin().abs() >= B_ZERO_MARGIN))
                .collect()
        })
        .collect()
}

/// `c_n = (1 + i z)/(1 − i z)` for every eigenvalue.
fn cayley_c(spec: &SphericalSpectrum) -> Vec<Complex64> {
    let i = Complex64::i();
    spec.z.iter().map(|z| (1.0 + i * z) / (1.0 - i * z)).collect()
}

/// Exact average of `w(p + θ)` (k = 1) or `w(p₁ + θ)w(p₂ + θ)` (k = 2) over
/// `θ`, for the trig loop.
pub fn circle_average(spec: &SphericalSpectrum, pts: &[f64]) -> Result<Complex64> {
    let c = cayley_c(spec);
    if c.iter().any(|c| !c.is_finite() || (c.norm() - 1.0).abs() < CORRELATOR_POLE_TOL) {
        return Err(Error::Pole { p: pts[0] });
    }
    let inside: Vec<bool> = c.iter().map(|c| c.norm() < 1.0).collect();
    // mean over the circle of (ζ − c)/(ζ + c) is 1 − σ, σ = 2·[c outside]
    let sigma = |k: usize| if inside[k] { 0.0 } else { 2.0 };
    let i = Complex64::i();
    match pts {
        [_] => Ok(i * (0..c.len()).map(|k| 1.0 - sigma(k)).sum::<f64>()),
        [p1, p2] => {
            let z1 = Complex64::from_polar(1.0, 2.0 * p1);
            let z2 = Complex64::from_polar(1.0, 2.0 * p2);
            let mut total = Complex64::new(0.0, 0.0);
            for a in 0..c.len() {
                for b in 0..c.len() {
                    let cross = match (inside[a], inside[b]) {
                        (true, true) => Complex64::new(0.0, 0.0),
                        (false, false) => Complex64::new(4.0, 0.0),
                        (true, false) => {
                            let den = c[a] * z2 - c[b] * z1;
                            if den.norm() < CORRELATOR_POLE_TOL {
                                return Err(Error::Pole { p: *p1 });
                            }
                            4.0 * c[a] * z2 / den
                        }
                        (false, true) => {
                            let den = c[b] * z1 - c[a] * z2;
                            if den.norm() < CORRELATOR_POLE_TOL {
                                return Err(Error::Pole { p: *p1 });
                            }
                            4.0 * c[b] * z1 / den
                        }
                    };
                    total += 1.0 - sigma(a) - sigma(b) + cross;
                }
            }
            Ok(-total)
        }
        _ => Err(Error::Domain("the circle average is implemented for k ≤ 2".into())),
    }
}

struct StreamResult {
    acc: Vec<ComplexAccumulator>,
    skipped: Vec<u64>,
    resamples: u64,
}

/// Monte Carlo estimate of `C_k` at every point set in `cfg`, from
/// `plan.trials` draws split over `plan.streams` streams.
pub fn mc_correlator(cfg: &CorrelatorConfig, plan: &McPlan) -> Result<Vec<CorrelatorEstimate>> {
    check_points(cfg)?;
    let sets = &cfg.point_sets;
    let shifts = match cfg.estimator {
        Estimator::ShiftAverage { shifts } => Some(admissible_shifts(sets, shifts)),
        _ => None,
    };
    let per_stream = run_streams(plan, |key, draws| -> Result<StreamResult> {
        let mut out = StreamResult {
            acc: vec![ComplexAccumulator::new(); sets.len()],
            skipped: vec![0; sets.len()],
            resamples: 0,
        };
        for i in 0..draws {
            let d = draw(cfg.n, cfg.class, key, i)?;
            out.resamples += u64::from(d.resamples);
            for (s, pts) in sets.iter().enumerate() {
                let value = match (&cfg.estimator, &shifts) {
                    (Estimator::CircleAverage, _) => circle_average(&d.spectrum, pts),
                    (Estimator::ShiftAverage { .. }, Some(th)) => th[s]
                        .iter()
                        .map(|&t| product_at(&d.spectrum, &cfg.loop_fns, pts, t))
                        .sum::<Result<Complex64>>()
                        .map(|v| v / th[s].len().max(1) as f64),
                    _ => product_at(&d.spectrum, &cfg.loop_fns, pts, 0.0),
                };
                match value {
                    Ok(v) => out.acc[s].push(v),
                    Err(Error::Pole { .. }) => out.skipped[s] += 1,
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(out)
    });
    let per_stream = per_stream.into_iter().collect::<Result<Vec<_>>>()?;
    let resamples = per_stream.iter().map(|r| r.resamples).sum();
    Ok(sets
        .iter()
        .enumerate()
        .map(|(s, pts)| {
            let mut total = ComplexAccumulator::new();
            let mut mom = MedianOfMeans::new();
            for r in &per_stream {
                total.merge(&r.acc[s]);
                mom.push_block(r.acc[s]);
            }
            CorrelatorEstimate {
                points: pts.clone(),
                n: cfg.n,
                class: cfg.class,
                mean: total.mean(),
                stderr: total.stderr_re(),
                stderr_im: total.stderr_im(),
                median_of_means: if mom.blocks() >= 3 { mom.estimate() } else { None },
                trials: plan.trials,
                skipped: per_stream.iter().map(|r| r.skipped[s]).sum(),
                resamples,
            }
        })
        .collect())
}

/// Value of the closed two-point function, flagged when the points coincide
/// modulo `π` and the diagonal limit was returned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C2Value {
    pub value: f64,
    pub diagonal: bool,
}

/// `(1 − (1 − x)^N)/x` for `x = sin²Δ`, `c2 = cos²Δ` supplied separately.
fn c2_ratio(n: usize, x: f64, c2: f64) -> f64 {
    let nf = n as f64;
    if x < C2_SERIES_SWITCH {
        // N − C(N,2)x + C(N,3)x² − C(N,4)x³
        let b2 = nf * (nf - 1.0) / 2.0;
        let b3 = b2 * (nf - 2.0) / 3.0;
        let b4 = b3 * (nf - 3.0) / 4.0;
        return nf - x * (b2 - x * (b3 - x * b4));
    }
    let numerator = if c2 < 0.5 { 1.0 - c2.powi(n as i32) } else { -(nf * (-x).ln_1p()).exp_m1() };
    numerator / x
}

/// `C₂(p₁, p₂) = −(1 − cos^{2N}Δ)/(1 − cos²Δ)`, `Δ = p₁ − p₂`, for the trig
/// loop at β = 2. Coincident points (mod π) return the limit `−N`, flagged.
pub fn analytic_c2(n: usize, p1: f64, p2: f64) -> C2Value {
    let d = p1 - p2;
    let (s, c) = d.sin_cos();
    let x = s * s;
    C2Value { value: -c2_ratio(n, x, c * c), diagonal: x == 0.0 }
}

/// `L_{nml}(q)`, the determinant entries of the β = 2 correlators:
/// `(−1)^{m−n} π q^{−(m−n+1)} B(m, N−m+1) · {u_m(N, q²) if m ≥ n, −v_m(N, q²) if m < n}`.
pub fn l_entry(n: usize, m: usize, big_n: usize, q: f64) -> Result<f64> {
    if n < 1 || n > big_n {
        return Err(Error::Domain(format!("row index n = {n} outside 1..={big_n}")));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Domain(format!("q = {q} must be positive and finite")));
    }
    let pair = beta_pair(m, big_n, q * q)?;
    let power = m as f64 - n as f64 + 1.0;
    let ln_mag = PI.ln() - power * q.ln() + ln_beta(m as f64, (big_n - m + 1) as f64)?;
    let sign = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
    let branch = if m >= n { pair.u } else { -pair.v };
    Ok(sign * ln_mag.exp() * branch)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedPoint {
    pub psi: [f64; 2],
    pub alpha: f64,
    pub n: usize,
    pub value: f64,
}

/// `C₂(ψ₁/N^α, ψ₂/N^α) · N^{−2α}`.
pub fn unfolded_c2(n: usize, alpha: f64, psi1: f64, psi2: f64) -> UnfoldedPoint {
    let s = (n as f64).powf(alpha);
    let value = analytic_c2(n, psi1 / s, psi2 / s).value / (s * s);
    UnfoldedPoint { psi: [psi1, psi2], alpha, n, value }
}

/// Large-N limit of the unfolded two-point function, `δ = ψ₁ − ψ₂`:
/// `−1/δ²` for α < ½, `−(1 − e^{−δ²})/δ²` at α = ½, `0` for α > ½.
pub fn f2_limit(alpha: f64, psi1: f64, psi2: f64) -> f64 {
    let d2 = (psi1 - psi2).powi(2);
    if (alpha - 0.5).abs() < 1e-12 {
        if d2 == 0.0 {
            -1.0
        } else {
            (-d2).exp_m1() / d2
        }
    } else if alpha < 0.5 {
        -1.0 / d2
    } else {
        0.0
    }
}

/// The `N` lists of the two unfolding studies.
pub const UNFOLD_NS_SIXTH: [usize; 9] = [5, 10, 20, 50, 100, 150, 200, 300, 1000];
pub const UNFOLD_NS_HALF: [usize; 8] = [2, 5, 7, 10, 15, 20, 50, 100];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnfoldingDistance {
    pub n: usize,
    pub alpha: f64,
    pub sup_distance: f64,
    /// Separation `δ` where the supremum was attained.
    pub at_delta: f64,
}

/// `sup_δ |unfolded_c2 − f2_limit|` over `samples` equidistant `δ` in
/// `[lo, hi]`.
pub fn unfolding_sup_distance(n: usize, alpha: f64, lo: f64, hi: f64, samples: usize) -> UnfoldingDistance {
    let samples = samples.max(2);
    let mut best = UnfoldingDistance { n, alpha, sup_distance: 0.0, at_delta: lo };
    for i in 0..samples {
        let d = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let gap = (unfolded_c2(n, alpha, d, 0.0).value - f2_limit(alpha, d, 0.0)).abs();
        if gap > best.sup_distance {
            best.sup_distance = gap;
            best.at_delta = d;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{euler_beta, u_fn, v_fn};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn c2_constant_at_n1() {
        for d in [0.01, 0.3, 1.0, 2.9, 1e-9] {
            assert!((analytic_c2(1, d, 0.0).value + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn c2_at_quarter_period() {
        for n in [1, 2, 5, 8, 100] {
            assert!((analytic_c2(n, 0.2 + FRAC_PI_2, 0.2).value + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn c2_matches_geometric_sum() {
        // −(1 − c^N)/(1 − c) = −Σ_{j<N} c^j with c = cos²Δ
        for n in [2usize, 3, 8, 40] {
            for d in [1e-7, 1e-4, 0.05, 0.7, 1.5, 2.4, PI - 1e-5] {
                let c = f64::cos(d).powi(2);
                let sum: f64 = (0..n).map(|j| c.powi(j as i32)).sum();
                let v = analytic_c2(n, d, 0.0).value;
                assert!((v + sum).abs() < 1e-12 * sum, "N={n} d={d}: {v} vs {}", -sum);
            }
        }
    }

    #[test]
    fn c2_series_branch_is_continuous() {
        let n = 12;
        let d = C2_SERIES_SWITCH.sqrt();
        let below = analytic_c2(n, d * (1.0 - 1e-9), 0.0).value;
        let above = analytic_c2(n, d * (1.0 + 1e-9), 0.0).value;
        assert!((below - above).abs() < 1e-10);
    }

    #[test]
    fn c2_diagonal_is_flagged() {
        let v = analytic_c2(7, 0.4, 0.4);
        assert!(v.diagonal);
        assert_eq!(v.value, -7.0);
        assert!(!analytic_c2(7, 0.4, 0.5).diagonal);
    }

    #[test]
    fn c2_symmetric_and_translation_invariant() {
        for n in [3, 8] {
            let a = analytic_c2(n, 0.3, 1.1).value;
            assert_eq!(a, analytic_c2(n, 1.1, 0.3).value);
            assert!((a - analytic_c2(n, 2.3, 3.1).value).abs() < 1e-13);
        }
    }

    #[test]
    fn l_entry_branches() {
        let (big_n, q) = (6usize, 0.8f64);
        for n in 1..=big_n {
            for m in 1..=big_n {
                let l = l_entry(n, m, big_n, q).unwrap();
                let b = euler_beta(m as f64, (big_n - m + 1) as f64).unwrap();
                let base = (-1f64).powi(m as i32 - n as i32) * PI * q.powf(-(m as f64 - n as f64 + 1.0)) * b;
                let branch = if m >= n { u_fn(m, big_n, q * q).unwrap() } else { -v_fn(m, big_n, q * q).unwrap() };
                assert!((l - base * branch).abs() < 1e-12 * l.abs().max(1e-300));
            }
        }
        // n = m: sign +1 and power q⁻¹
        let l = l_entry(3, 3, 5, 2.0).unwrap();
        let b = euler_beta(3.0, 3.0).unwrap();
        assert!((l - PI / 2.0 * b * u_fn(3, 5, 4.0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn l_entry_complement() {
        // at q = 1, |L(n, m)| + |L(n', m)| = π B(m, N−m+1) for n ≤ m < n'
        let big_n = 7;
        for m in 1..big_n {
            let b = euler_beta(m as f64, (big_n - m + 1) as f64).unwrap();
            let lhs = l_entry(1, m, big_n, 1.0).unwrap().abs() + l_entry(big_n, m, big_n, 1.0).unwrap().abs();
            assert!((lhs - PI * b).abs() < 1e-13);
        }
    }

    #[test]
    fn l_entry_domain() {
        assert!(l_entry(0, 1, 3, 1.0).is_err());
        assert!(l_entry(1, 4, 3, 1.0).is_err());
        assert!(l_entry(1, 1, 3, 0.0).is_err());
    }

    #[test]
    fn f2_limit_branches() {
        assert!((f2_limit(0.5, 2.0, 0.0) + (1.0 - (-4f64).exp()) / 4.0).abs() < 1e-15);
        assert!((f2_limit(0.5, 2.0, 0.0) + 0.245_42).abs() < 1e-5);
        assert!((f2_limit(0.5, 1e-9, 0.0) + 1.0).abs() < 1e-12);
        assert_eq!(f2_limit(0.5, 0.0, 0.0), -1.0);
        assert_eq!(f2_limit(0.7, 1.3, 0.2), 0.0);
        assert_eq!(f2_limit(1.0 / 6.0, 2.0, 0.0), -0.25);
    }

    #[test]
    fn unfolding_n1_is_minus_one() {
        for alpha in [1.0 / 6.0, 0.5, 0.9] {
            assert!((unfolded_c2(1, alpha, 1.7, 0.3).value + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn unfolding_half_converges() {
        let p = unfolded_c2(1000, 0.5, 1.0, 0.0);
        assert!((p.value - f2_limit(0.5, 1.0, 0.0)).abs() < 2e-3);
        let mut prev = f64::INFINITY;
        for n in UNFOLD_NS_HALF.iter().chain([1000].iter()) {
            let d = unfolding_sup_distance(*n, 0.5, 0.5, 5.0, 2001).sup_distance;
            assert!(d < prev, "N={n}");
            prev = d;
        }
        assert!(prev < 5e-3);
    }

    #[test]
    fn unfolding_regimes_pointwise() {
        // α > ½ tends to 0, α < ½ to −1/δ²
        let a = unfolded_c2(100_000, 0.7, 1.0, 0.0).value;
        assert!(a.abs() < 0.02, "{a}");
        let b = unfolded_c2(1_000_000, 0.25, 1.0, 0.0).value;
        assert!((b + 1.0).abs() < 0.01, "{b}");
    }

    fn spectrum(z: &[Complex64]) -> SphericalSpectrum {
        SphericalSpectrum { z: z.to_vec(), class: SymmetryClass::AIII, n: z.len() }
    }

    #[test]
    fn circle_average_matches_dense_shift_average() {
        let spec = spectrum(&[Complex64::new(0.3, 0.7), Complex64::new(-1.2, -0.4), Complex64::new(2.0, 0.1)]);
        let lp = LoopFunctions::Trig;
        for pts in [vec![0.4], vec![0.4, 1.3], vec![0.2, 2.8]] {
            let m = 20_000;
            let dense: Complex64 = (0..m)
                .map(|r| product_at(&spec, &lp, &pts, PI * (r as f64 + 0.5) / m as f64).unwrap())
                .sum::<Complex64>()
                / m as f64;
            let exact = circle_average(&spec, &pts).unwrap();
            assert!((dense - exact).norm() < 1e-6 * (1.0 + exact.norm()), "{pts:?}: {dense} vs {exact}");
        }
    }

    #[test]
    fn trig_density_in_cayley_form() {
        let z = [Complex64::new(0.3, 0.7), Complex64::new(-1.2, -0.4)];
        let spec = spectrum(&z);
        let c = cayley_c(&spec);
        for p in [0.3, 1.1, 2.5] {
            let zeta = Complex64::from_polar(1.0, 2.0 * p);
            let w: Complex64 = c.iter().map(|c| Complex64::i() * (zeta - c) / (zeta + c)).sum();
            let direct = winding_density_spectral_tol(&spec, &LoopFunctions::Trig, p, 1e-12).unwrap();
            assert!((w - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_points() {
        let mut cfg = CorrelatorConfig {
            n: 2,
            class: SymmetryClass::AIII,
            loop_fns: LoopFunctions::Trig,
            point_sets: vec![vec![0.3, 0.3]],
            estimator: Estimator::Plain,
        };
        let plan = McPlan::new(1, 1, 10);
        assert!(matches!(mc_correlator(&cfg, &plan), Err(Error::Domain(_))));
        cfg.point_sets = vec![vec![0.3, PI + 1e-4]];
        assert!(matches!(mc_correlator(&cfg, &plan), Err(Error::Domain(_))));
        cfg.point_sets = vec![vec![0.1, 0.2, 0.3]];
        cfg.estimator = Estimator::CircleAverage;
        assert!(matches!(mc_correlator(&cfg, &plan), Err(Error::Domain(_))));
    }

    #[test]
    fn n1_two_point_is_minus_one() {
        let cfg = CorrelatorConfig {
            n: 1,
            class: SymmetryClass::AIII,
            loop_fns: LoopFunctions::Trig,
            point_sets: vec![vec![0.4, 1.9]],
            estimator: Estimator::CircleAverage,
        };
        let est = mc_correlator(&cfg, &McPlan::new(5, 4, 2000)).unwrap();
        // the circle average is exactly −1 for every N = 1 draw
        assert!((est[0].mean.re + 1.0).abs() < 1e-9);
        assert_eq!(est[0].trials, 2000);
    }

    #[test]
    fn estimators_agree_statistically() {
        let mk = |estimator| CorrelatorConfig {
            n: 3,
            class: SymmetryClass::AIII,
            loop_fns: LoopFunctions::Trig,
            point_sets: vec![vec![0.5, 1.4]],
            estimator,
        };
        let plan = McPlan::new(11, 8, 20_000);
        let exact = analytic_c2(3, 0.5, 1.4).value;
        for e in [Estimator::Plain, Estimator::ShiftAverage { shifts: 16 }, Estimator::CircleAverage] {
            let est = &mc_correlator(&mk(e), &plan).unwrap()[0];
            assert!((est.mean.re - exact).abs() < 5.0 * est.stderr, "{e:?}: {} ± {} vs {exact}", est.mean.re, est.stderr);
            assert!(est.mean.im.abs() < 5.0 * est.stderr_im.max(1e-12), "{e:?} imaginary part {}", est.mean.im);
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let cfg = CorrelatorConfig {
            n: 2,
            class: SymmetryClass::CII,
            loop_fns: LoopFunctions::Trig,
            point_sets: vec![vec![0.7]],
            estimator: Estimator::Plain,
        };
        let plan = McPlan::new(2, 3, 300);
        assert_eq!(mc_correlator(&cfg, &plan).unwrap(), mc_correlator(&cfg, &plan).unwrap());
    }
}
