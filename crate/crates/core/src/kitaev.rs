//! Bloch Hamiltonian of the Kitaev chain, `H(k) = d(k)·σ` with
//! `d(k) = (0, Δ sin k, μ + 2t cos k)`, its gap and the winding number of the
//! planar curve `(d_y, d_z)` around the origin.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Gaps at or below this are reported as a phase transition.
pub const GAP_TOL: f64 = 1e-9;
pub const DEFAULT_K_GRID: usize = 1024;

pub type Mat2 = Matrix2<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KitaevParams {
    pub t: f64,
    pub mu: f64,
    pub delta: f64,
}

impl KitaevParams {
    pub fn new(t: f64, mu: f64, delta: f64) -> Self {
        Self { t, mu, delta }
    }

    /// `|μ| < 2|t|` with `Δ ≠ 0`.
    pub fn is_topological(&self) -> bool {
        self.mu.abs() < 2.0 * self.t.abs() && self.delta != 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DVector {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl DVector {
    pub fn norm(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy + self.dz * self.dz).sqrt()
    }
}

pub fn d_vector(params: &KitaevParams, k: f64) -> DVector {
    DVector { dx: 0.0, dy: params.delta * k.sin(), dz: params.mu + 2.0 * params.t * k.cos() }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// `d·σ`.
pub fn bloch_hamiltonian(params: &KitaevParams, k: f64) -> Mat2 {
    let d = d_vector(params, k);
    sigma_x() * c(d.dx, 0.0) + sigma_y() * c(d.dy, 0.0) + sigma_z() * c(d.dz, 0.0)
}

/// Chiral operator in the d-vector basis. Since `d_x = 0`, `H(k)` is built
/// from `σ_y` and `σ_z` only and anticommutes with `σ_x`.
pub fn chiral_operator() -> Mat2 {
    sigma_x()
}

/// Hadamard rotation `U = (σ_x + σ_z)/√2`, with `U σ_x U† = σ_z`: it takes the
/// chiral operator to `diag(1, −1)` and `H(k)` to block off-diagonal form.
pub fn chiral_basis_rotation() -> Mat2 {
    (sigma_x() + sigma_z()) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// `‖{H(k), C}‖_max`.
pub fn chirality_defect(params: &KitaevParams, k: f64) -> f64 {
    let h = bloch_hamiltonian(params, k);
    let cop = chiral_operator();
    (h * cop + cop * h).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a 2×2 Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &Mat2) -> [f64; 2] {
    let tr = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let diff = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let r = (diff * diff + h[(0, 1)].norm_sqr()).sqrt();
    [tr - r, tr + r]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub k: Vec<f64>,
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
    /// `2·min_k |d(k)|` after local refinement.
    pub gap: f64,
    pub k_min: f64,
}

fn d_norm_sqr(params: &KitaevParams, k: f64) -> f64 {
    let d = d_vector(params, k);
    d.dy * d.dy + d.dz * d.dz
}

/// Golden-section minimization of `|d(k)|²` on `[lo, hi]`.
fn refine_min(params: &KitaevParams, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |k| d_norm_sqr(params, k);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bands `E±(k) = ±|d(k)|` on a uniform grid of `[0, 2π)` and the gap.
pub fn dispersion_and_gap(params: &KitaevParams, grid: usize) -> Result<Dispersion> {
    if grid < 2 {
        return Err(Error::Domain(format!("k-grid needs at least 2 points, got {grid}")));
    }
    let h = TAU / grid as f64;
    let k: Vec<f64> = (0..grid).map(|j| j as f64 * h).collect();
    let e_plus: Vec<f64> = k.iter().map(|&k| d_vector(params, k).norm()).collect();
    let e_minus = e_plus.iter().map(|e| -e).collect();
    let (j_min, _) = e_plus
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    let k0 = k[j_min];
    let (mut k_min, mut best) = refine_min(params, k0 - h, k0 + h);
    // the band minimum can sit exactly on a node
    for cand in [k0, 0.0, PI] {
        let v = d_norm_sqr(params, cand);
        if v < best {
            best = v;
            k_min = cand;
        }
    }
    Ok(Dispersion { k, e_plus, e_minus, gap: 2.0 * best.max(0.0).sqrt(), k_min: k_min.rem_euclid(TAU) })
}

/// Winding of the closed polygon through `(d_y, d_z)` at the grid nodes,
/// or `None` if some step turns by `π/4` or more. With every step that small
/// the winding is the signed number of crossings of the ray `d_z = 0, d_y > 0`.
fn polygon_winding(params: &KitaevParams, grid: usize) -> Option<i64> {
    let h = TAU / grid as f64;
    polygon_winding_with(grid, |j| {
        let d = d_vector(params, j as f64 * h);
        (d.dy, d.dz)
    })
}

fn polygon_winding_with(grid: usize, d_at: impl Fn(usize) -> (f64, f64)) -> Option<i64> {
    let first = d_at(0);
    let mut prev = first;
    let mut crossings = 0i64;
    for j in 1..=grid {
        let cur = if j == grid { first } else { d_at(j) };
        let dot = prev.0 * cur.0 + prev.1 * cur.1;
        let cross = prev.0 * cur.1 - prev.1 * cur.0;
        // tan(π/4) = 1
        if dot <= 0.0 || cross.abs() >= dot {
            return None;
        }
        if (prev.1 < 0.0) != (cur.1 < 0.0) {
            // d_y at the crossing, by linear interpolation
            let y = prev.0 - prev.1 * (cur.0 - prev.0) / (cur.1 - prev.1);
            if y > 0.0 {
                crossings += if cur.1 >= 0.0 { 1 } else { -1 };
            }
        }
        prev = cur;
    }
    Some(crossings)
}

/// Winding of `(d_y(k), d_z(k))` around the origin, counted counterclockwise
/// in the `(y, z)` plane. The grid is doubled until no single step turns by
/// more than `π/4`.
pub fn kitaev_winding(params: &KitaevParams) -> Result<i64> {
    kitaev_winding_on_grid(params, DEFAULT_K_GRID)
}

pub fn kitaev_winding_on_grid(params: &KitaevParams, grid: usize) -> Result<i64> {
    let gap = dispersion_and_gap(params, grid.max(2))?.gap;
    winding_with_gap(params, gap, grid)
}

fn winding_with_gap(params: &KitaevParams, gap: f64, grid: usize) -> Result<i64> {
    if gap <= GAP_TOL {
        return Err(Error::PhaseTransition { gap });
    }
    let mut grid = grid.max(8);
    loop {
        if let Some(w) = polygon_winding(params, grid) {
            return Ok(w);
        }
        if grid >= 1 << 24 {
            return Err(Error::PhaseTransition { gap });
        }
        grid *= 2;
    }
}

/// One row of a phase-diagram scan; `w` is `None` at a transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub mu: f64,
    pub delta: f64,
    pub w: Option<i64>,
    pub gap: f64,
}

pub fn phase_point(params: &KitaevParams) -> Result<PhasePoint> {
    phase_point_on(params, &KGrid::new(DEFAULT_K_GRID))
}

/// `sin k`, `cos k` on a uniform grid, shared by the points of a scan.
struct KGrid {
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl KGrid {
    fn new(grid: usize) -> Self {
        let (sin, cos) = (0..grid).map(|j| (TAU * j as f64 / grid as f64).sin_cos()).unzip();
        Self { sin, cos }
    }
}

fn phase_point_on(params: &KitaevParams, kg: &KGrid) -> Result<PhasePoint> {
    let grid = kg.sin.len();
    let h = TAU / grid as f64;
    let d_at = |j: usize| (params.delta * kg.sin[j], params.mu + 2.0 * params.t * kg.cos[j]);
    let (mut j_min, mut best) = (0, f64::INFINITY);
    for j in 0..grid {
        let (y, z) = d_at(j);
        let v = y * y + z * z;
        if v < best {
            best = v;
            j_min = j;
        }
    }
    let k0 = j_min as f64 * h;
    let (_, refined) = refine_min(params, k0 - h, k0 + h);
    for v in [refined, d_norm_sqr(params, 0.0), d_norm_sqr(params, PI)] {
        best = best.min(v);
    }
    let gap = 2.0 * best.max(0.0).sqrt();
    let w = if gap <= GAP_TOL {
        None
    } else if let Some(w) = polygon_winding_with(grid, d_at) {
        Some(w)
    } else {
        Some(winding_with_gap(params, gap, 2 * grid)?)
    };
    Ok(PhasePoint { t: params.t, mu: params.mu, delta: params.delta, w, gap })
}

/// Scan of `μ` over `[mu_lo, mu_hi]` in `steps + 1` equidistant points.
pub fn mu_scan(t: f64, delta: f64, mu_lo: f64, mu_hi: f64, steps: usize) -> Result<Vec<PhasePoint>> {
    let steps = steps.max(1);
    let kg = KGrid::new(DEFAULT_K_GRID);
    (0..=steps)
        .map(|i| {
            let mu = mu_lo + (mu_hi - mu_lo) * i as f64 / steps as f64;
            phase_point_on(&KitaevParams::new(t, mu, delta), &kg)
        })
        .collect()
}

/// Positions where `|W|` changes between neighboring scan points, located at
/// the transition point if one was hit, else at the midpoint.
pub fn scan_flips(scan: &[PhasePoint]) -> Vec<f64> {
    let mut flips = Vec::new();
    let mut last: Option<(f64, i64)> = None;
    let mut pending_transition: Option<f64> = None;
    for pt in scan {
        match pt.w {
            None => pending_transition = Some(pt.mu),
            Some(w) => {
                if let Some((mu0, w0)) = last {
                    if w0.abs() != w.abs() {
                        flips.push(pending_transition.unwrap_or(0.5 * (mu0 + pt.mu)));
                    }
                }
                last = Some((pt.mu, w));
                pending_transition = None;
            }
        }
    }
    flips
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scan_path_matches_standalone() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let p = KitaevParams::new(rng.random_range(-2.0..2.0), rng.random_range(-4.0..4.0), rng.random_range(-2.0..2.0));
            let pt = phase_point(&p).unwrap();
            let disp = dispersion_and_gap(&p, DEFAULT_K_GRID).unwrap();
            assert!((pt.gap - disp.gap).abs() <= 1e-12);
            assert_eq!(pt.w, kitaev_winding(&p).ok());
            assert_eq!(pt.w.map(i64::abs), Some(p.is_topological() as i64));
        }
    }

    #[test]
    fn d_vector_values() {
        let p = KitaevParams::new(1.0, 1.0, 1.0);
        assert_eq!(d_vector(&p, 0.0), DVector { dx: 0.0, dy: 0.0, dz: 3.0 });
        let d = d_vector(&KitaevParams::new(0.7, 0.3, 2.0), PI);
        assert!((d.dz - (0.3 - 1.4)).abs() < 1e-15 && d.dy.abs() < 1e-15);
        assert_eq!(d_vector(&KitaevParams::new(1.0, 0.5, 0.0), 1.3).dy, 0.0);
    }

    #[test]
    fn hamiltonian_is_chiral_and_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = KitaevParams::new(rng.random_range(-2.0..2.0), rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0));
            let k = rng.random_range(0.0..TAU);
            assert!(chirality_defect(&p, k) < 1e-15);
            let h = bloch_hamiltonian(&p, k);
            assert!((h - h.adjoint()).iter().all(|z| z.norm() < 1e-15));
            let e = hermitian_eigenvalues(&h);
            let d = d_vector(&p, k).norm();
            assert!((e[0] + d).abs() < 1e-12 && (e[1] - d).abs() < 1e-12);
        }
        let e = hermitian_eigenvalues(&bloch_hamiltonian(&KitaevParams::new(1.0, 1.0, 1.0), 0.0));
        assert_eq!(e, [-3.0, 3.0]);
    }

    #[test]
    fn rotation_takes_chiral_operator_to_diagonal() {
        let u = chiral_basis_rotation();
        let id = Mat2::identity();
        assert!((u * u.adjoint() - id).iter().all(|z| z.norm() < 1e-15));
        let rotated = u * chiral_operator() * u.adjoint();
        assert!((rotated - sigma_z()).iter().all(|z| z.norm() < 1e-15));
        let p = KitaevParams::new(0.8, 0.4, 1.1);
        let h = u * bloch_hamiltonian(&p, 0.9) * u.adjoint();
        assert!(h[(0, 0)].norm() < 1e-15 && h[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn gap_values() {
        assert!(dispersion_and_gap(&KitaevParams::new(0.5, 1.0, 1.0), 1024).unwrap().gap <= GAP_TOL);
        assert!(dispersion_and_gap(&KitaevParams::new(1.0, 1.0, 1.0), 1024).unwrap().gap > 0.1);
        // Δ = 0 inside |μ| < 2|t|: d_z crosses zero off the grid
        let g = dispersion_and_gap(&KitaevParams::new(1.0, 0.3, 0.0), 1024).unwrap().gap;
        assert!(g <= GAP_TOL, "{g}");
        assert!(dispersion_and_gap(&KitaevParams::new(1.0, 1.0, 1.0), 1).is_err());
    }

    #[test]
    fn gap_closes_only_on_boundary() {
        for &t in &[0.3, 1.0, -0.8] {
            for i in 0..=40 {
                let mu = -3.0 + 0.15 * i as f64;
                let g = dispersion_and_gap(&KitaevParams::new(t, mu, 0.7), 1024).unwrap().gap;
                let on_boundary = (mu.abs() - 2.0 * f64::abs(t)).abs() < 1e-12;
                assert_eq!(g <= GAP_TOL, on_boundary, "t={t} mu={mu} gap={g}");
            }
        }
    }

    #[test]
    fn winding_phases() {
        assert_eq!(kitaev_winding(&KitaevParams::new(1.0, 1.0, 1.0)).unwrap().abs(), 1);
        assert_eq!(kitaev_winding(&KitaevParams::new(0.25, 1.0, 1.0)).unwrap(), 0);
        assert_eq!(kitaev_winding(&KitaevParams::new(1.0, 0.0, 1.0)).unwrap().abs(), 1);
        assert!(matches!(kitaev_winding(&KitaevParams::new(0.5, 1.0, 1.0)), Err(Error::PhaseTransition { .. })));
    }

    #[test]
    fn winding_stable_under_refinement() {
        for p in [KitaevParams::new(1.0, 1.999, 0.01), KitaevParams::new(1.0, 2.001, 3.0), KitaevParams::new(-1.0, 0.5, 1.0)] {
            let w = kitaev_winding_on_grid(&p, 64).unwrap();
            for g in [256, 1024, 8192] {
                assert_eq!(kitaev_winding_on_grid(&p, g).unwrap(), w);
            }
        }
    }

    #[test]
    fn scan_flips_at_boundary() {
        let scan = mu_scan(1.0, 1.0, 0.0, 3.0, 3000).unwrap();
        let flips = scan_flips(&scan);
        assert_eq!(flips.len(), 1);
        assert!((flips[0] - 2.0).abs() <= 1e-3);
        for pt in &scan {
            if let Some(w) = pt.w {
                assert_eq!(w.abs() == 1, KitaevParams::new(pt.t, pt.mu, pt.delta).is_topological());
            }
        }
    }
}
