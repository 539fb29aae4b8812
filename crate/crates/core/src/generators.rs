//! Generators `Z_{k|k}(q, p) = ⟨Π_j det K(p_j) / det K(q_j)⟩`: Monte Carlo over
//! matrix draws for both classes, the β = 2 closed form as a ratio of two
//! `k×k` determinants, and finite differences of that closed form back to the
//! correlators.
//!
//! Pulling `b K₁` out of `K(p)` gives, per draw,
//! `det K(p)/det K(q) = (b(p)/b(q))^{βN/2} Π_n (κ(p) + z_n)/(κ(q) + z_n)`
//! over the `βN/2` eigenvalues of `Y`. For the trig loop the same ratio reads
//! `e^{−iL(p−q)} Π_n (ζ_p + c_n)/(ζ_q + c_n)` with `ζ = e^{2ip}`, `L = βN/2` and
//! `c_n = (1 + i z_n)/(1 − i z_n)`, which [`Estimator::CircleAverage`]
//! averages over common shifts of all points by residues.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlators::{analytic_c2, Estimator};
use crate::ensembles::{draw, SphericalSpectrum, SymmetryClass};
use crate::error::{Error, Result};
use crate::linalg::{log_det, CMat, LogDet};
use crate::loops::LoopFunctions;
use crate::mc::{run_streams, McPlan};
use crate::stats::{ComplexAccumulator, MedianOfMeans};

pub use crate::linalg::pfaffian;

/// Draws whose denominator `|det(κ(q_j) + Y)|` falls below this are skipped.
pub const DENOMINATOR_FLOOR: f64 = 1e-280;

/// Relative size of `vᵀ(q)σ₂v(p)` below which two points count as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Offset used to step off coincident points before extrapolating.
pub const COINCIDENCE_STEP: f64 = 1e-6;

pub const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VPoint {
    pub p: f64,
    pub v: [Complex64; 2],
}

impl VPoint {
    pub fn new(lp: &LoopFunctions, p: f64) -> Self {
        Self { p, v: lp.v(p) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Mc,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorValue {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub value: Complex64,
    pub route: Route,
    pub trials: Option<u64>,
    /// Standard errors of the real and imaginary parts.
    pub stderr: Option<(f64, f64)>,
    pub median_of_means: Option<Complex64>,
    pub skipped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub class: SymmetryClass,
    pub loop_fns: LoopFunctions,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub estimator: Estimator,
}

fn check_config(cfg: &GeneratorConfig) -> Result<()> {
    if cfg.n == 0 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    if cfg.q.len() != cfg.p.len() || cfg.q.is_empty() {
        return Err(Error::Domain(format!("need equally many q and p points, got {} and {}", cfg.q.len(), cfg.p.len())));
    }
    match cfg.estimator {
        Estimator::Plain => {
            for &x in cfg.q.iter().chain(&cfg.p) {
                if cfg.loop_fns.at(x).b.norm() == 0.0 {
                    return Err(Error::Pole { p: x });
                }
            }
            Ok(())
        }
        Estimator::CircleAverage if cfg.loop_fns.is_trig() => Ok(()),
        Estimator::CircleAverage => Err(Error::Domain("the circle average relies on the trig loop".into())),
        Estimator::ShiftAverage { .. } => Err(Error::Domain("generators support the plain and circle-average estimators".into())),
    }
}

/// `Π_j det K(p_j)/det K(q_j)` for one spectrum, via `κ` and `b`. `None` when a
/// denominator determinant is below [`DENOMINATOR_FLOOR`].
pub fn determinant_ratio(spec: &SphericalSpectrum, lp: &LoopFunctions, q: &[f64], p: &[f64]) -> Result<Option<Complex64>> {
    let side = spec.z.len() as f64;
    let mut acc = LogDet::one();
    for (&qj, &pj) in q.iter().zip(p) {
        let (kq, kp) = (lp.kappa(qj)?, lp.kappa(pj)?);
        let mut den = LogDet::one();
        let mut num = LogDet::one();
        for z in &spec.z {
            den = den.mul(LogDet::from_value(kq + z));
            num = num.mul(LogDet::from_value(kp + z));
        }
        if den.ln_abs < DENOMINATOR_FLOOR.ln() {
            return Ok(None);
        }
        let b_ratio = LogDet::from_value(lp.at(pj).b / lp.at(qj).b);
        let pref = LogDet { ln_abs: side * b_ratio.ln_abs, phase: b_ratio.phase.powi(spec.z.len() as i32) };
        acc = acc.mul(pref).mul(num).div(den);
    }
    Ok(Some(acc.value()))
}

/// Exact average over common shifts `θ` of the trig-loop ratio
/// `Π_j det K(p_j + θ)/det K(q_j + θ)` for one spectrum. `None` if two poles
/// coincide or a pole sits on the unit circle.
pub fn circle_average_ratio(spec: &SphericalSpectrum, q: &[f64], p: &[f64]) -> Option<Complex64> {
    let i = Complex64::i();
    let c: Vec<Complex64> = spec.z.iter().map(|z| (1.0 + i * z) / (1.0 - i * z)).collect();
    let side = c.len() as f64;
    // terms (α + β η)/(α + γ η)
    let mut terms = Vec::with_capacity(c.len() * q.len());
    for (&qj, &pj) in q.iter().zip(p) {
        let (zp, zq) = (Complex64::from_polar(1.0, 2.0 * pj), Complex64::from_polar(1.0, 2.0 * qj));
        terms.extend(c.iter().map(|&cn| (cn, zp, zq)));
    }
    let shift: f64 = p.iter().zip(q).map(|(p, q)| p - q).sum();
    let mut total = Complex64::new(1.0, 0.0);
    for (idx, &(a, b, g)) in terms.iter().enumerate() {
        if !a.is_finite() || (a.norm() - 1.0).abs() < 1e-12 {
            return None;
        }
        if a.norm() >= 1.0 {
            continue;
        }
        let eta = -a / g;
        let mut r = (a + b * eta) / (g * eta);
        for (l, &(al, bl, gl)) in terms.iter().enumerate() {
            if l != idx {
                let den = al + gl * eta;
                if den.norm() < 1e-12 * al.norm().max(1.0) {
                    return None;
                }
                r *= (al + bl * eta) / den;
            }
        }
        total += r;
    }
    Some(Complex64::from_polar(1.0, -side * shift) * total)
}

/// Monte Carlo estimate of `Z_{k|k}(q, p)`.
pub fn mc_generator(cfg: &GeneratorConfig, plan: &McPlan) -> Result<GeneratorValue> {
    check_config(cfg)?;
    let per_stream = run_streams(plan, |key, draws| -> Result<(ComplexAccumulator, u64)> {
        let mut acc = ComplexAccumulator::new();
        let mut skipped = 0;
        for i in 0..draws {
            let d = draw(cfg.n, cfg.class, key, i)?;
            let v = match cfg.estimator {
                Estimator::CircleAverage => circle_average_ratio(&d.spectrum, &cfg.q, &cfg.p),
                _ => determinant_ratio(&d.spectrum, &cfg.loop_fns, &cfg.q, &cfg.p)?,
            };
            match v {
                Some(v) if v.is_finite() => acc.push(v),
                _ => skipped += 1,
            }
        }
        Ok((acc, skipped))
    });
    let mut total = ComplexAccumulator::new();
    let mut mom = MedianOfMeans::new();
    let mut skipped = 0;
    for r in per_stream {
        let (acc, s) = r?;
        total.merge(&acc);
        mom.push_block(acc);
        skipped += s;
    }
    Ok(GeneratorValue {
        q: cfg.q.clone(),
        p: cfg.p.clone(),
        value: total.mean(),
        route: Route::Mc,
        trials: Some(plan.trials),
        stderr: Some((total.stderr_re(), total.stderr_im())),
        median_of_means: if mom.blocks() >= 3 { mom.estimate() } else { None },
        skipped,
    })
}

fn pairing(x: &[Complex64; 2], y: &[Complex64; 2]) -> Complex64 {
    // xᵀ σ₂ y with σ₂ = [[0, −i], [i, 0]]
    Complex64::i() * (x[1] * y[0] - x[0] * y[1])
}

fn hermitian(x: &[Complex64; 2], y: &[Complex64; 2]) -> Complex64 {
    x[0].conj() * y[0] + x[1].conj() * y[1]
}

/// Closed form of the β = 2 generator,
/// `det[ (vᵀ(q_m)σ₂v(p_n))⁻¹ (v†(q_m)v(p_n)/v†(q_m)v(q_m))^N ] / det[ (vᵀ(q_m)σ₂v(p_n))⁻¹ ]`.
/// Fails with [`Error::NearCoincident`] when a pairing form vanishes.
pub fn analytic_z_aiii(lp: &LoopFunctions, q: &[f64], p: &[f64], n: usize) -> Result<Complex64> {
    let k = q.len();
    if k == 0 || p.len() != k {
        return Err(Error::Domain(format!("need equally many q and p points, got {} and {}", q.len(), p.len())));
    }
    let vq: Vec<[Complex64; 2]> = q.iter().map(|&x| lp.v(x)).collect();
    let vp: Vec<[Complex64; 2]> = p.iter().map(|&x| lp.v(x)).collect();
    let norm = |v: &[Complex64; 2]| hermitian(v, v).re.sqrt();
    let mut a = CMat::zeros(k, k);
    let mut d = CMat::zeros(k, k);
    for m in 0..k {
        let qq = hermitian(&vq[m], &vq[m]);
        for j in 0..k {
            let form = pairing(&vq[m], &vp[j]);
            if form.norm() < COINCIDENCE_TOL * norm(&vq[m]) * norm(&vp[j]) {
                return Err(Error::NearCoincident(format!(
                    "vᵀ(q)σ₂v(p) vanishes for q = {}, p = {}; perturb the points",
                    q[m], p[j]
                )));
            }
            let inv = form.inv();
            d[(m, j)] = inv;
            a[(m, j)] = inv * (hermitian(&vq[m], &vp[j]) / qq).powu(n as u32);
        }
    }
    let den = log_det(&d);
    if !den.ln_abs.is_finite() {
        return Err(Error::NearCoincident("the Cauchy-type denominator determinant vanishes; q points coincide".into()));
    }
    Ok(log_det(&a).div(den).value())
}

/// [`analytic_z_aiii`], stepping off coincident pairs by
/// [`COINCIDENCE_STEP`] and extrapolating linearly back when needed.
pub fn analytic_z_aiii_limit(lp: &LoopFunctions, q: &[f64], p: &[f64], n: usize) -> Result<Complex64> {
    match analytic_z_aiii(lp, q, p, n) {
        Err(Error::NearCoincident(_)) => {
            let at = |h: f64| {
                let shifted: Vec<f64> = p.iter().map(|x| x + h).collect();
                analytic_z_aiii(lp, q, &shifted, n)
            };
            Ok(at(COINCIDENCE_STEP)? * 2.0 - at(2.0 * COINCIDENCE_STEP)?)
        }
        other => other,
    }
}

/// `cos^N(p − q)`, the β = 2 generator at `k = 1` for the trig loop.
pub fn trig_z11(n: usize, q: f64, p: f64) -> f64 {
    (p - q).cos().powi(n as i32)
}

/// Central difference of order `k = points.len()` with step `h`, and the
/// rounding-error bound `ε·max|Z|/h^k` of that quotient.
fn mixed_difference(points: &[f64], n: usize, h: f64) -> Result<(Complex64, f64)> {
    let lp = LoopFunctions::Trig;
    let z = |dp: &[f64]| {
        let p: Vec<f64> = points.iter().zip(dp).map(|(x, d)| x + d).collect();
        analytic_z_aiii(&lp, points, &p, n)
    };
    let (vals, weights, denom): (Vec<Complex64>, &[f64], f64) = match points.len() {
        1 => (vec![z(&[h])?, z(&[-h])?], &[1.0, -1.0], 2.0 * h),
        2 => (vec![z(&[h, h])?, z(&[h, -h])?, z(&[-h, h])?, z(&[-h, -h])?], &[1.0, -1.0, -1.0, 1.0], 4.0 * h * h),
        k => return Err(Error::Domain(format!("finite-difference bridge implemented for k ∈ {{1, 2}}, got {k}"))),
    };
    let sum: Complex64 = vals.iter().zip(weights).map(|(v, w)| v * *w).sum();
    let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok((sum / denom, 4.0 * f64::EPSILON * scale / denom))
}

/// `∂^k Z_{k|k}(q, p)/∂p_1⋯∂p_k` at `q = p = points` for the trig loop at
/// β = 2: central differences with step `h` and `h/2`, combined by one
/// Richardson step. The differences never evaluate at `p_n = q_n`. Fails with
/// [`Error::StepSize`] when the two levels disagree, or the rounding bound of
/// the finer level exceeds, `1e−3` relative: truncation from a too large step
/// or cancellation from a too small one.
pub fn fd_correlator_from_z(points: &[f64], n: usize, h: f64) -> Result<Complex64> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step {h} must be positive")));
    }
    let (coarse, _) = mixed_difference(points, n, h)?;
    let (fine, rounding) = mixed_difference(points, n, h / 2.0)?;
    let value = (fine * 4.0 - coarse) / 3.0;
    let diff = (fine - coarse).norm().max(rounding);
    if !value.is_finite() || diff > 1e-3 * value.norm().max(1.0) {
        return Err(Error::StepSize { diff });
    }
    Ok(value)
}

/// Bridge residual `|fd_correlator_from_z − C₂|` at `k = 2`.
pub fn bridge_residual(n: usize, p1: f64, p2: f64) -> Result<f64> {
    let fd = fd_correlator_from_z(&[p1, p2], n, FD_STEP)?;
    Ok((fd - Complex64::new(analytic_c2(n, p1, p2).value, 0.0)).norm())
}
