//! Chiral Gaussian blocks `(K₁, K₂)` and the spherical spectrum of `Y = K₁⁻¹K₂`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{generalized_eigenvalues, CMat};
use crate::rng::{complex_normal, StreamKey};

/// Draws whose `K₁` condition estimate exceeds this are redrawn.
pub const MAX_K1_CONDITION: f64 = 1e12;

/// Relative tolerance for matching `z` with `z̄` in CII spectra.
pub const CII_PAIRING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryClass {
    /// Chiral unitary, β = 2.
    AIII,
    /// Chiral symplectic, β = 4.
    CII,
}

impl SymmetryClass {
    pub fn dyson_beta(self) -> usize {
        match self {
            Self::AIII => 2,
            Self::CII => 4,
        }
    }

    /// Side length `βN/2` of each block.
    pub fn block_side(self, n: usize) -> usize {
        self.dyson_beta() * n / 2
    }
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AIII => "AIII",
            Self::CII => "CII",
        })
    }
}

impl FromStr for SymmetryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "AIII" | "BETA2" | "2" => Ok(Self::AIII),
            "CII" | "BETA4" | "4" => Ok(Self::CII),
            other => Err(Error::Domain(format!("unknown symmetry class {other:?}"))),
        }
    }
}

/// One ensemble draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiralSample {
    pub k1: CMat,
    pub k2: CMat,
    pub class: SymmetryClass,
    pub n: usize,
}

impl ChiralSample {
    pub fn new(k1: CMat, k2: CMat, class: SymmetryClass, n: usize) -> Self {
        let side = class.block_side(n);
        assert_eq!(k1.shape(), (side, side), "K₁ has the wrong shape for {class}, N = {n}");
        assert_eq!(k2.shape(), (side, side), "K₂ has the wrong shape for {class}, N = {n}");
        Self { k1, k2, class, n }
    }

    /// `(cK₁, cK₂)`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self { k1: &self.k1 * c, k2: &self.k2 * c, ..self.clone() }
    }

    /// `K(p) = aK₁ + bK₂` and `K′(p) = a′K₁ + b′K₂`.
    pub fn loop_matrices(&self, pt: &crate::loops::LoopPoint) -> (CMat, CMat) {
        (&self.k1 * pt.a + &self.k2 * pt.b, &self.k1 * pt.da + &self.k2 * pt.db)
    }
}

/// N×N complex Gaussian matrix with unit-variance real and imaginary parts.
pub fn complex_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(n, n);
    // Row-major fill so the stream layout does not depend on storage order.
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = complex_normal(rng);
        }
    }
    m
}

/// 2N×2N quaternion-real Gaussian matrix: each 2×2 block is `[[α, β], [−β̄, ᾱ]]`
/// with four independent unit-variance real components.
pub fn quaternion_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let alpha = complex_normal(rng);
            let beta = complex_normal(rng);
            m[(2 * i, 2 * j)] = alpha;
            m[(2 * i, 2 * j + 1)] = beta;
            m[(2 * i + 1, 2 * j)] = -beta.conj();
            m[(2 * i + 1, 2 * j + 1)] = alpha.conj();
        }
    }
    m
}

/// `J = diag(ε, …, ε)` with `ε = [[0, 1], [−1, 0]]`.
pub fn symplectic_unit(n: usize) -> CMat {
    let mut j = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(2 * i, 2 * i + 1)] = Complex64::new(1.0, 0.0);
        j[(2 * i + 1, 2 * i)] = Complex64::new(-1.0, 0.0);
    }
    j
}

/// Max-entry violation of `J K̄ Jᵀ = K`.
pub fn quaternion_real_defect(k: &CMat) -> f64 {
    let n = k.nrows() / 2;
    let j = symplectic_unit(n);
    let back = &j * k.map(|c| c.conj()) * j.transpose();
    (back - k).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn sample_chiral_pair<R: Rng + ?Sized>(n: usize, class: SymmetryClass, rng: &mut R) -> ChiralSample {
    assert!(n >= 1, "N must be at least 1");
    let (k1, k2) = match class {
        SymmetryClass::AIII => (complex_gaussian(n, rng), complex_gaussian(n, rng)),
        SymmetryClass::CII => (quaternion_gaussian(n, rng), quaternion_gaussian(n, rng)),
    };
    ChiralSample { k1, k2, class, n }
}

/// Eigenvalues of `Y = K₁⁻¹K₂`. For CII they are stored as exact conjugate
/// pairs `[w₁, w̄₁, w₂, w̄₂, …]` with `Im w_j ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalSpectrum {
    pub z: Vec<Complex64>,
    pub class: SymmetryClass,
    pub n: usize,
}

impl SphericalSpectrum {
    /// `N` conjugate-pair representatives for CII, all eigenvalues for AIII.
    pub fn representatives(&self) -> impl Iterator<Item = &Complex64> {
        let step = match self.class {
            SymmetryClass::AIII => 1,
            SymmetryClass::CII => 2,
        };
        self.z.iter().step_by(step)
    }
}

fn pair_conjugates(z: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut used = vec![false; z.len()];
    let mut out = Vec::with_capacity(z.len());
    for i in 0..z.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = z[i].conj();
        let (j, dist) = z
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (w - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::Solver(format!("odd CII spectrum, {} left unpaired", z[i])))?;
        if dist > CII_PAIRING_TOL * (1.0 + z[i].norm()) {
            return Err(Error::Solver(format!(
                "CII pairing failed: {} has nearest conjugate partner {} at distance {dist:.3e}",
                z[i], z[j]
            )));
        }
        used[j] = true;
        let mut w = (z[i] + z[j].conj()) * 0.5;
        if w.im < 0.0 {
            w = w.conj();
        }
        out.push(w);
        out.push(w.conj());
    }
    Ok(out)
}

/// Spectrum of `Y` from the pencil `K₂x = zK₁x`.
///
/// Returns [`Error::Resample`] when `K₁` is too ill-conditioned, and
/// [`Error::Solver`] if a CII spectrum cannot be paired.
pub fn spherical_spectrum(s: &ChiralSample) -> Result<SphericalSpectrum> {
    let pencil = generalized_eigenvalues(&s.k2, &s.k1)?;
    if !(pencil.b_condition <= MAX_K1_CONDITION) {
        return Err(Error::Resample { cond: pencil.b_condition });
    }
    if pencil.eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Resample { cond: pencil.b_condition });
    }
    let z = match s.class {
        SymmetryClass::AIII => pencil.eigenvalues,
        SymmetryClass::CII => pair_conjugates(&pencil.eigenvalues)?,
    };
    Ok(SphericalSpectrum { z, class: s.class, n: s.n })
}

/// Result of a draw with the number of rejected attempts.
#[derive(Debug, Clone)]
pub struct Draw {
    pub sample: ChiralSample,
    pub spectrum: SphericalSpectrum,
    pub resamples: u32,
}

/// Draws `(K₁, K₂)` at address `(key, draw_index)` and computes its spectrum,
/// redrawing from the same stream window while `K₁` is ill-conditioned or
/// `accept` rejects the spectrum.
pub fn draw_with<F>(n: usize, class: SymmetryClass, key: StreamKey, draw_index: u64, accept: F) -> Result<Draw>
where
    F: Fn(&SphericalSpectrum) -> bool,
{
    let mut rng = key.draw(draw_index);
    let mut resamples = 0u32;
    loop {
        let sample = sample_chiral_pair(n, class, &mut rng);
        match spherical_spectrum(&sample) {
            Ok(spectrum) if accept(&spectrum) => return Ok(Draw { sample, spectrum, resamples }),
            Ok(_) | Err(Error::Resample { .. }) => {}
            Err(e) => return Err(e),
        }
        resamples += 1;
        if resamples > 1000 {
            return Err(Error::Solver(format!("draw {draw_index} of stream {key:?} rejected 1000 times")));
        }
    }
}

pub fn draw(n: usize, class: SymmetryClass, key: StreamKey, draw_index: u64) -> Result<Draw> {
    draw_with(n, class, key, draw_index, |_| true)
}

/// Number of eigenvalues with `|z| ≤ q` (CII: number of conjugate pairs).
pub fn count_inside_radius(spec: &SphericalSpectrum, q: f64) -> usize {
    spec.representatives().filter(|z| z.norm() <= q).count()
}

/// Number of eigenvalues inside the unit circle; `|z| = 1` counts as inside,
/// and CII conjugate pairs count once.
pub fn count_inside(spec: &SphericalSpectrum) -> usize {
    count_inside_radius(spec, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::u_fn;

    #[test]
    fn n1_aiii_is_scalar_ratio() {
        let key = StreamKey::new(5, 0);
        let d = draw(1, SymmetryClass::AIII, key, 0).unwrap();
        assert_eq!(d.sample.k1.shape(), (1, 1));
        let z = d.sample.k2[(0, 0)] / d.sample.k1[(0, 0)];
        assert!((d.spectrum.z[0] - z).norm() < 1e-14 * z.norm().max(1.0));
    }

    #[test]
    fn n1_cii_quaternion_form() {
        let mut rng = StreamKey::new(6, 0).draw(0);
        let s = sample_chiral_pair(1, SymmetryClass::CII, &mut rng);
        for k in [&s.k1, &s.k2] {
            assert_eq!(k.shape(), (2, 2));
            assert_eq!(k[(1, 1)], k[(0, 0)].conj());
            assert_eq!(k[(1, 0)], -k[(0, 1)].conj());
        }
    }

    #[test]
    fn cii_blocks_are_quaternion_real() {
        let mut rng = StreamKey::new(7, 0).draw(0);
        for n in [1, 3, 6] {
            let s = sample_chiral_pair(n, SymmetryClass::CII, &mut rng);
            assert!(quaternion_real_defect(&s.k1) < 1e-15);
            assert!(quaternion_real_defect(&s.k2) < 1e-15);
        }
    }

    #[test]
    fn reproducible() {
        let key = StreamKey::new(99, 3);
        let a = draw(4, SymmetryClass::CII, key, 17).unwrap();
        let b = draw(4, SymmetryClass::CII, key, 17).unwrap();
        assert_eq!(a.sample, b.sample);
        assert_eq!(a.spectrum, b.spectrum);
    }

    #[test]
    fn cii_conjugate_closure() {
        let key = StreamKey::new(8, 0);
        for i in 0..200 {
            let d = draw(4, SymmetryClass::CII, key, i).unwrap();
            let mut fwd: Vec<_> = d.spectrum.z.clone();
            let mut conj: Vec<_> = d.spectrum.z.iter().map(|z| z.conj()).collect();
            let k = |z: &Complex64| (z.re, z.im);
            fwd.sort_by(|a, b| k(a).partial_cmp(&k(b)).unwrap());
            conj.sort_by(|a, b| k(a).partial_cmp(&k(b)).unwrap());
            for (a, b) in fwd.iter().zip(&conj) {
                assert!((a - b).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn scale_invariance() {
        let key = StreamKey::new(10, 0);
        for i in 0..20 {
            let d = draw(5, SymmetryClass::AIII, key, i).unwrap();
            let c = Complex64::new(-3.7, 0.4);
            let s2 = spherical_spectrum(&d.sample.scaled(c)).unwrap();
            for (a, b) in d.spectrum.z.iter().zip(&s2.z) {
                assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn counting() {
        let spec = SphericalSpectrum {
            z: vec![Complex64::new(0.5, 0.0), Complex64::new(2.0, 0.0)],
            class: SymmetryClass::AIII,
            n: 2,
        };
        assert_eq!(count_inside(&spec), 1);
        let empty = SphericalSpectrum { z: vec![], class: SymmetryClass::AIII, n: 0 };
        assert_eq!(count_inside(&empty), 0);
        let edge = SphericalSpectrum { z: vec![Complex64::new(0.0, 1.0)], class: SymmetryClass::AIII, n: 1 };
        assert_eq!(count_inside(&edge), 1);
        let pair = SphericalSpectrum {
            z: vec![Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2), Complex64::new(3.0, 1.0), Complex64::new(3.0, -1.0)],
            class: SymmetryClass::CII,
            n: 2,
        };
        assert_eq!(count_inside(&pair), 1);
    }

    #[test]
    fn class_parsing() {
        assert_eq!("aiii".parse::<SymmetryClass>().unwrap(), SymmetryClass::AIII);
        assert_eq!("CII".parse::<SymmetryClass>().unwrap(), SymmetryClass::CII);
        assert!("BDI".parse::<SymmetryClass>().is_err());
        assert_eq!(SymmetryClass::CII.block_side(3), 6);
    }

    #[test]
    fn ill_conditioned_k1_is_resampled() {
        let mut k1 = CMat::identity(3, 3);
        k1[(2, 2)] = Complex64::new(1e-14, 0.0);
        let s = ChiralSample::new(k1, CMat::identity(3, 3), SymmetryClass::AIII, 3);
        assert!(matches!(spherical_spectrum(&s), Err(Error::Resample { .. })));
    }

    #[test]
    fn radial_counts_match_beta_sums() {
        // E #{|z| ≤ q} = Σ_m u_m(N, q²) for the complex spherical ensemble.
        let key = StreamKey::new(12, 0);
        let n = 3;
        let trials = 20_000;
        for q in [0.5, 1.0, 2.0] {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for i in 0..trials {
                let c = count_inside_radius(&draw(n, SymmetryClass::AIII, key, i).unwrap().spectrum, q) as f64;
                sum += c;
                sum_sq += c * c;
            }
            let mean = sum / trials as f64;
            let se = ((sum_sq / trials as f64 - mean * mean) / trials as f64).sqrt();
            let expected: f64 = (1..=n).map(|m| u_fn(m, n, q * q).unwrap()).sum();
            assert!((mean - expected).abs() < 4.0 * se, "q={q}: {mean} vs {expected} ± {se}");
        }
    }
}
