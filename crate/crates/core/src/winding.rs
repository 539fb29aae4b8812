//! Winding-number density `w(p) = d/dp ln det K(p)` and the integer winding
//! number `W = (2πi)⁻¹ ∮ w(p) dp`, each by two independent routes.
//!
//! * density: trace route `tr(K′K⁻¹)` on the matrices, spectral route
//!   `(βN/2)·b′/b + κ′ Σ_n 1/(κ + z_n)` on the eigenvalues of `Y`;
//! * winding: trapezoidal contour integral of the trace-route density, and a
//!   count of eigenvalues of `Y` on one side of the curve `−κ(p)`.
//!
//! For the trig loop `−κ(p) = −cot p` sweeps the real axis, so each eigenvalue
//! contributes `+1` from the upper half plane and `−1` from the lower one. The
//! Cayley map `z ↦ (z − i)/(z + i)` sends the upper half plane to the unit disc,
//! which is how the count is phrased in terms of [`count_inside`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::{count_inside, ChiralSample, SphericalSpectrum};
use crate::error::{Error, Result};
use crate::linalg::trace_solve;
use crate::loops::LoopFunctions;

/// Orientation of the count route: `W = WINDING_SIGN · (2m − βN/2)` with `m`
/// the number of Cayley-mapped eigenvalues inside the unit circle. Fixed by
/// comparing against the contour route at `N = 1` (see [`calibrate_sign`]).
pub const WINDING_SIGN: i64 = 1;

pub const DEFAULT_GRID: usize = 4096;
pub const MAX_GRID: usize = 1 << 16;
pub const QUANTIZATION_TOL: f64 = 1e-6;

/// `|κ(p) + z_n|` below this is treated as a pole of the spectral density.
pub const POLE_TOL: f64 = 1e-12;

/// Eigenvalues whose Cayley image lies this close to the unit circle sit on
/// the counting boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingRecord {
    pub w: i64,
    pub contour_value: Complex64,
    pub residual: f64,
    pub m_inside: usize,
    pub grid_size: usize,
    /// Near-real zeros of `det K` integrated analytically.
    #[serde(default)]
    pub subtracted_zeros: usize,
}

/// `κ(p) = a(p)/b(p)`.
pub fn kappa(lp: &LoopFunctions, p: f64) -> Result<Complex64> {
    lp.kappa(p)
}

/// Density from the eigenvalues of `Y`. Fails with [`Error::Pole`] where
/// `b(p) = 0` or `κ(p)` comes within [`POLE_TOL`] of some `−z_n`.
pub fn winding_density_spectral(spec: &SphericalSpectrum, lp: &LoopFunctions, p: f64) -> Result<Complex64> {
    winding_density_spectral_tol(spec, lp, p, POLE_TOL)
}

/// [`winding_density_spectral`] with an explicit pole threshold.
pub fn winding_density_spectral_tol(spec: &SphericalSpectrum, lp: &LoopFunctions, p: f64, pole_tol: f64) -> Result<Complex64> {
    let pt = lp.at(p);
    let k = lp.kappa(p)?;
    let dk = lp.kappa_derivative(p)?;
    let side = spec.z.len() as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for z in &spec.z {
        let d = k + z;
        if d.norm() < pole_tol {
            return Err(Error::Pole { p });
        }
        sum += d.inv();
    }
    Ok(pt.db / pt.b * side + dk * sum)
}

/// `y(p) = w(p) − N cot p` for the trig loop at β = 2.
pub fn fluctuating_part(spec: &SphericalSpectrum, p: f64) -> Result<Complex64> {
    let k = LoopFunctions::Trig.kappa(p)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for z in &spec.z {
        let d = k + z;
        if d.norm() < POLE_TOL {
            return Err(Error::Pole { p });
        }
        sum += d.inv();
    }
    Ok(-sum / p.sin().powi(2))
}

/// Density `tr(K′(p) K(p)⁻¹)` from one LU factorization of `K(p)`. Regular
/// wherever `det K(p) ≠ 0`, including zeros of `b`.
pub fn winding_density_trace(s: &ChiralSample, lp: &LoopFunctions, p: f64) -> Result<Complex64> {
    trace_density_at(s, &lp.at(p), p)
}

/// [`winding_density_trace`] at complex `p`.
pub fn winding_density_trace_complex(s: &ChiralSample, lp: &LoopFunctions, p: Complex64) -> Result<Complex64> {
    trace_density_at(s, &lp.at_complex(p), p.re)
}

fn trace_density_at(s: &ChiralSample, pt: &crate::loops::LoopPoint, p: f64) -> Result<Complex64> {
    let (k, dk) = s.loop_matrices(pt);
    let max_abs = |m: &crate::linalg::CMat| m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = (pt.a.norm() + pt.b.norm()) * max_abs(&s.k1).max(max_abs(&s.k2));
    trace_solve(&k, &dk, 1e-14 * scale).ok_or(Error::DegenerateLoop { p })
}

/// Grid peaks of `|w|` above this seed a search for a zero of `det K` near
/// the real axis.
pub const NEAR_ZERO_PEAK: f64 = 50.0;

/// Zeros of `det K` with `|Im p|` below this are subtracted from the density
/// before integrating.
pub const NEAR_ZERO_STRIP: f64 = 0.1;

/// `½ cot((p − a)/2)`: 2π-periodic, simple pole of residue 1 at `a`.
fn cot_pole(p: f64, a: Complex64) -> Complex64 {
    let x = (Complex64::new(p, 0.0) - a) * 0.5;
    x.cos() / x.sin() * 0.5
}

/// Zeros of `det K(p)` in the strip `|Im p| < NEAR_ZERO_STRIP`, found by
/// Newton's method on `det K` (step `−1/w`) from the peaks of `|w|` on a
/// uniform grid. Uses the matrices only, never the spectrum of `Y`.
pub fn near_real_zeros(s: &ChiralSample, lp: &LoopFunctions, grid: usize) -> Result<Vec<Complex64>> {
    let tau = std::f64::consts::TAU;
    let mags = (0..grid)
        .map(|j| winding_density_trace(s, lp, tau * j as f64 / grid as f64).map(|w| w.norm()))
        .collect::<Result<Vec<_>>>()?;
    let mut zeros: Vec<Complex64> = Vec::new();
    for j in 0..grid {
        let (prev, next) = (mags[(j + grid - 1) % grid], mags[(j + 1) % grid]);
        if mags[j] < NEAR_ZERO_PEAK || mags[j] < prev || mags[j] < next {
            continue;
        }
        let mut p = Complex64::new(tau * j as f64 / grid as f64, 0.0);
        for _ in 0..100 {
            let w = match winding_density_trace_complex(s, lp, p) {
                Ok(w) => w,
                // Pivot collapse: already on the zero to working precision.
                Err(Error::DegenerateLoop { .. }) => break,
                Err(e) => return Err(e),
            };
            let step = w.inv();
            p -= step;
            if step.norm() <= 1e-15 * (1.0 + p.norm()) {
                break;
            }
        }
        p.re = p.re.rem_euclid(tau);
        let near = |q: &Complex64| {
            let d = (p.re - q.re).rem_euclid(tau);
            d.min(tau - d).hypot(p.im - q.im) < 1e-8
        };
        if p.im.abs() < NEAR_ZERO_STRIP && p.im != 0.0 && !zeros.iter().any(near) {
            zeros.push(p);
        }
    }
    Ok(zeros)
}

fn trapezoid_sum(
    s: &ChiralSample,
    lp: &LoopFunctions,
    zeros: &[Complex64],
    grid: usize,
    offset: usize,
    stride: usize,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut j = offset;
    while j < grid {
        let p = std::f64::consts::TAU * j as f64 / grid as f64;
        acc += winding_density_trace(s, lp, p)?;
        for &a in zeros {
            acc -= cot_pole(p, a);
        }
        j += stride;
    }
    Ok(acc)
}

/// Contour route. Starts at `grid_size` points and doubles, reusing earlier
/// nodes, until the value is within [`QUANTIZATION_TOL`] of an integer or
/// [`MAX_GRID`] is exceeded.
///
/// A zero of `det K` very close to the real axis makes `w` too sharp for any
/// affordable grid. If plain doubling fails, the zeros found by
/// [`near_real_zeros`] are subtracted as `½ cot((p − a)/2)` terms, whose
/// integrals `iπ·sgn(Im a)` are exact, and the smooth remainder is integrated
/// again.
pub fn winding_number_contour(s: &ChiralSample, lp: &LoopFunctions, grid_size: usize) -> Result<WindingRecord> {
    match contour_with(s, lp, grid_size, &[]) {
        Err(Error::NotQuantized { .. }) => {
            let zeros = near_real_zeros(s, lp, grid_size.max(DEFAULT_GRID))?;
            if zeros.is_empty() {
                return contour_with(s, lp, grid_size, &[]);
            }
            contour_with(s, lp, grid_size, &zeros)
        }
        other => other,
    }
}

fn contour_with(s: &ChiralSample, lp: &LoopFunctions, grid_size: usize, zeros: &[Complex64]) -> Result<WindingRecord> {
    let exact: f64 = zeros.iter().map(|a| 0.5 * a.im.signum()).sum();
    let mut grid = grid_size.max(8);
    let mut sum = trapezoid_sum(s, lp, zeros, grid, 0, 1)?;
    loop {
        // (1/2πi) · (2π/M) Σ w = mean(w) / i
        let value = sum / grid as f64 / Complex64::i() + exact;
        let w = value.re.round();
        let residual = (value - Complex64::new(w, 0.0)).norm();
        if residual <= QUANTIZATION_TOL {
            return Ok(WindingRecord {
                w: w as i64,
                contour_value: value,
                residual,
                m_inside: 0,
                grid_size: grid,
                subtracted_zeros: zeros.len(),
            });
        }
        if grid * 2 > MAX_GRID {
            return Err(Error::NotQuantized { value: value.re, residual, grid });
        }
        grid *= 2;
        sum += trapezoid_sum(s, lp, zeros, grid, 1, 2)?;
    }
}

/// Cayley image `(z − i)/(z + i)` of the spectrum.
pub fn cayley_image(spec: &SphericalSpectrum) -> SphericalSpectrum {
    let i = Complex64::i();
    SphericalSpectrum {
        z: spec.z.iter().map(|z| (z - i) / (z + i)).collect(),
        class: spec.class,
        n: spec.n,
    }
}

/// Number of eigenvalues counted by the winding route: all eigenvalues (CII
/// pairs split) whose Cayley image lies in the closed unit disc.
pub fn count_route_inside(spec: &SphericalSpectrum) -> Result<usize> {
    let image = cayley_image(spec);
    if let Some(z) = image.z.iter().find(|c| (c.norm() - 1.0).abs() < BOUNDARY_TOL) {
        return Err(Error::Domain(format!("eigenvalue with Cayley image {z} on the counting boundary")));
    }
    // count the full list, not pair representatives
    let flat = SphericalSpectrum { class: crate::ensembles::SymmetryClass::AIII, ..image };
    Ok(count_inside(&flat))
}

/// Count route for the trig loop: `W = s·(2m − βN/2)`.
pub fn winding_number_count(spec: &SphericalSpectrum, lp: &LoopFunctions) -> Result<i64> {
    if !lp.is_trig() {
        return Err(Error::Domain("the count route is defined for the trig loop".into()));
    }
    let m = count_route_inside(spec)? as i64;
    Ok(WINDING_SIGN * (2 * m - spec.z.len() as i64))
}

/// Both routes on one draw; a disagreement is an invariant violation.
pub fn winding_both_routes(
    s: &ChiralSample,
    spec: &SphericalSpectrum,
    lp: &LoopFunctions,
    grid_size: usize,
) -> Result<WindingRecord> {
    let mut rec = winding_number_contour(s, lp, grid_size)?;
    let count = winding_number_count(spec, lp)?;
    rec.m_inside = count_route_inside(spec)?;
    if count != rec.w {
        return Err(Error::RouteMismatch { contour: rec.w, count });
    }
    Ok(rec)
}

/// Determines the orientation of the count route empirically: for `N = 1`
/// draws, the sign `s` with `W_contour = s·(2m − 1)`. Returns `None` if the
/// draws disagree with every sign.
pub fn calibrate_sign(key: crate::rng::StreamKey, draws: u64) -> Result<Option<i64>> {
    let mut plus = true;
    let mut minus = true;
    for i in 0..draws {
        let d = crate::ensembles::draw(1, crate::ensembles::SymmetryClass::AIII, key, i)?;
        let rec = winding_number_contour(&d.sample, &LoopFunctions::Trig, DEFAULT_GRID)?;
        let m = count_route_inside(&d.spectrum)? as i64;
        plus &= rec.w == 2 * m - 1;
        minus &= rec.w == -(2 * m - 1);
    }
    Ok(match (plus, minus) {
        (true, false) => Some(1),
        (false, true) => Some(-1),
        _ => None,
    })
}
