//! Dense complex linear algebra: a single-shift complex QZ solver for
//! `A x = z B x`, log-magnitude determinants, and the Pfaffian.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Unitary plane rotation `[[c, s], [−s̄, c]]` with real `c`.
#[derive(Debug, Clone, Copy)]
struct Givens {
    c: f64,
    s: Complex64,
}

impl Givens {
    /// Rotation with `G·[f; g] = [r; 0]`.
    fn new(f: Complex64, g: Complex64) -> Self {
        if g == ZERO {
            return Self { c: 1.0, s: ZERO };
        }
        if f == ZERO {
            return Self { c: 0.0, s: g.conj() / g.norm() };
        }
        let fa = f.norm();
        let rho = fa.hypot(g.norm());
        Self { c: fa / rho, s: (f / fa) * g.conj() / rho }
    }

    fn rotate_rows(&self, m: &mut CMat, i: usize, j: usize, cols: std::ops::Range<usize>) {
        for k in cols {
            let x = m[(i, k)];
            let y = m[(j, k)];
            m[(i, k)] = x * self.c + self.s * y;
            m[(j, k)] = -self.s.conj() * x + y * self.c;
        }
    }
}

/// Right rotation on columns `(k, k+1)` that annihilates `x` in a row vector
/// `(x, y)`.
#[derive(Debug, Clone, Copy)]
struct ColumnGivens(Givens);

impl ColumnGivens {
    fn new(x: Complex64, y: Complex64) -> Self {
        Self(Givens::new(y, x))
    }

    fn rotate_cols(&self, m: &mut CMat, k: usize, rows: std::ops::Range<usize>) {
        let Givens { c, s } = self.0;
        for i in rows {
            let a = m[(i, k)];
            let b = m[(i, k + 1)];
            m[(i, k)] = a * c - s.conj() * b;
            m[(i, k + 1)] = s * a + b * c;
        }
    }
}

/// Eigenvalues of the pencil `A − zB` together with a condition estimate for `B`.
#[derive(Debug, Clone)]
pub struct PencilSpectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Frobenius-norm condition estimate `‖R‖·‖R⁻¹‖` of the triangular factor of `B`.
    pub b_condition: f64,
}

/// Triangularizes `b` with row rotations, applying the same rotations to `a`.
fn triangularize(a: &mut CMat, b: &mut CMat) {
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1..n).rev() {
            let g = Givens::new(b[(i - 1, j)], b[(i, j)]);
            g.rotate_rows(b, i - 1, i, j..n);
            g.rotate_rows(a, i - 1, i, 0..n);
            b[(i, j)] = ZERO;
        }
    }
}

fn triangular_condition(r: &CMat) -> f64 {
    let n = r.nrows();
    let norm_r = r.norm();
    // ‖R⁻¹‖_F by back substitution, column by column.
    let mut inv_sq = 0.0;
    let mut x = vec![ZERO; n];
    for col in 0..n {
        for i in (0..n).rev() {
            if i > col {
                x[i] = ZERO;
                continue;
            }
            let mut acc = if i == col { ONE } else { ZERO };
            for k in i + 1..=col {
                acc -= r[(i, k)] * x[k];
            }
            let d = r[(i, i)];
            if d == ZERO {
                return f64::INFINITY;
            }
            x[i] = acc / d;
        }
        inv_sq += x.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    norm_r * inv_sq.sqrt()
}

/// Reduces `(a, b)` to upper Hessenberg / upper triangular form, `b` already
/// triangular on entry.
fn hessenberg_triangular(a: &mut CMat, b: &mut CMat) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for j in 0..n - 2 {
        for i in (j + 2..n).rev() {
            let g = Givens::new(a[(i - 1, j)], a[(i, j)]);
            g.rotate_rows(a, i - 1, i, j..n);
            g.rotate_rows(b, i - 1, i, i - 1..n);
            a[(i, j)] = ZERO;
            let z = ColumnGivens::new(b[(i, i - 1)], b[(i, i)]);
            z.rotate_cols(b, i - 1, 0..i + 1);
            z.rotate_cols(a, i - 1, 0..n);
            b[(i, i - 1)] = ZERO;
        }
    }
}

fn pencil_shift(a: &CMat, b: &CMat, hi: usize) -> Complex64 {
    let (a11, a12, a21, a22) = (a[(hi - 1, hi - 1)], a[(hi - 1, hi)], a[(hi, hi - 1)], a[(hi, hi)]);
    let (b11, b12, b22) = (b[(hi - 1, hi - 1)], b[(hi - 1, hi)], b[(hi, hi)]);
    // M = A₂ B₂⁻¹ for the trailing 2×2 block.
    let i11 = ONE / b11;
    let i22 = ONE / b22;
    let i12 = -b12 * i11 * i22;
    let m11 = a11 * i11;
    let m12 = a11 * i12 + a12 * i22;
    let m21 = a21 * i11;
    let m22 = a21 * i12 + a22 * i22;
    let half_tr = (m11 + m22) * 0.5;
    let det = m11 * m22 - m12 * m21;
    let disc = (half_tr * half_tr - det).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    let target = a22 / b22;
    if (l1 - target).norm() <= (l2 - target).norm() {
        l1
    } else {
        l2
    }
}

/// Generalized eigenvalues of `A x = z B x` by complex QZ. Neither matrix is
/// inverted. Fails if `B` has an exactly zero pivot or the iteration stalls.
pub fn generalized_eigenvalues(a: &CMat, b: &CMat) -> Result<PencilSpectrum> {
    let n = a.nrows();
    assert!(a.is_square() && b.shape() == a.shape(), "pencil must be square and conforming");
    let mut a = a.clone();
    let mut b = b.clone();
    triangularize(&mut a, &mut b);
    let b_condition = triangular_condition(&b);
    if !b_condition.is_finite() {
        return Ok(PencilSpectrum { eigenvalues: Vec::new(), b_condition });
    }
    hessenberg_triangular(&mut a, &mut b);

    let eps = f64::EPSILON;
    let max_iter = 60 * n.max(1);
    let mut total_iter = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n.saturating_sub(1);
    while hi > 0 {
        // Negligible subdiagonals.
        for k in 1..=hi {
            let scale = a[(k, k)].norm() + a[(k - 1, k - 1)].norm();
            if a[(k, k - 1)].norm() <= eps * scale.max(f64::MIN_POSITIVE) {
                a[(k, k - 1)] = ZERO;
            }
        }
        if a[(hi, hi - 1)] == ZERO {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        let mut lo = hi - 1;
        while lo > 0 && a[(lo, lo - 1)] != ZERO {
            lo -= 1;
        }
        total_iter += 1;
        since_deflation += 1;
        if total_iter > max_iter {
            return Err(Error::Solver(format!("QZ did not converge in {max_iter} sweeps (n = {n})")));
        }
        let mut shift = pencil_shift(&a, &b, hi);
        if since_deflation % 11 == 10 {
            shift += (a[(hi, hi - 1)] / b[(hi - 1, hi - 1)]).norm() * 1.5;
        }
        if !shift.re.is_finite() || !shift.im.is_finite() {
            return Err(Error::Solver("non-finite QZ shift".into()));
        }
        let x = a[(lo, lo)] / b[(lo, lo)] - shift;
        let y = a[(lo + 1, lo)] / b[(lo, lo)];
        let g = Givens::new(x, y);
        g.rotate_rows(&mut a, lo, lo + 1, lo..n);
        g.rotate_rows(&mut b, lo, lo + 1, lo..n);
        for k in lo..hi {
            let z = ColumnGivens::new(b[(k + 1, k)], b[(k + 1, k + 1)]);
            z.rotate_cols(&mut b, k, 0..k + 2);
            z.rotate_cols(&mut a, k, 0..(k + 3).min(hi + 1));
            b[(k + 1, k)] = ZERO;
            if k + 2 <= hi {
                let g = Givens::new(a[(k + 1, k)], a[(k + 2, k)]);
                g.rotate_rows(&mut a, k + 1, k + 2, k..n);
                g.rotate_rows(&mut b, k + 1, k + 2, k + 1..n);
                a[(k + 2, k)] = ZERO;
            }
        }
    }
    let eigenvalues = (0..n).map(|i| a[(i, i)] / b[(i, i)]).collect();
    Ok(PencilSpectrum { eigenvalues, b_condition })
}

/// Determinant in `ln|det|` plus unit-phase form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub ln_abs: f64,
    pub phase: Complex64,
}

impl LogDet {
    pub fn one() -> Self {
        Self { ln_abs: 0.0, phase: ONE }
    }

    pub fn mul(self, other: Self) -> Self {
        Self { ln_abs: self.ln_abs + other.ln_abs, phase: self.phase * other.phase }
    }

    pub fn div(self, other: Self) -> Self {
        Self { ln_abs: self.ln_abs - other.ln_abs, phase: self.phase * other.phase.conj() }
    }

    pub fn from_value(z: Complex64) -> Self {
        let r = z.norm();
        Self { ln_abs: r.ln(), phase: if r > 0.0 { z / r } else { ONE } }
    }

    pub fn value(self) -> Complex64 {
        self.phase * self.ln_abs.exp()
    }
}

/// `det m` by partial-pivot LU, returned in log form. Exactly singular input
/// yields `ln_abs = −∞`.
pub fn log_det(m: &CMat) -> LogDet {
    let n = m.nrows();
    let mut lu = m.clone();
    let mut acc = LogDet::one();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(k, k)].norm();
        for i in k + 1..n {
            let v = lu[(i, k)].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return LogDet { ln_abs: f64::NEG_INFINITY, phase: ONE };
        }
        if piv != k {
            lu.swap_rows(piv, k);
            acc.phase = -acc.phase;
        }
        let d = lu[(k, k)];
        acc = acc.mul(LogDet::from_value(d));
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            if f != ZERO {
                for j in k + 1..n {
                    let t = lu[(k, j)];
                    lu[(i, j)] -= f * t;
                }
            }
        }
    }
    acc
}

pub fn det(m: &CMat) -> Complex64 {
    log_det(m).value()
}

/// `tr(M⁻¹ R)` from one LU factorization of `M`. `None` if a pivot has
/// magnitude at most `pivot_tol`.
pub fn trace_solve(m: &CMat, rhs: &CMat, pivot_tol: f64) -> Option<Complex64> {
    let n = m.nrows();
    let mut lu = m.clone();
    let mut r = rhs.clone();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(k, k)].norm();
        for i in k + 1..n {
            let v = lu[(i, k)].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= pivot_tol {
            return None;
        }
        if piv != k {
            lu.swap_rows(piv, k);
            r.swap_rows(piv, k);
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            if f != ZERO {
                for j in k + 1..n {
                    let t = lu[(k, j)];
                    lu[(i, j)] -= f * t;
                }
                for j in 0..n {
                    let t = r[(k, j)];
                    r[(i, j)] -= f * t;
                }
            }
        }
    }
    // Back substitution, only the diagonal of the solution is needed.
    let mut trace = ZERO;
    let mut x = vec![ZERO; n];
    for col in 0..n {
        for i in (0..n).rev() {
            let mut acc = r[(i, col)];
            for k in i + 1..n {
                acc -= lu[(i, k)] * x[k];
            }
            x[i] = acc / lu[(i, i)];
        }
        trace += x[col];
    }
    Some(trace)
}

/// Pfaffian of an even-dimensional antisymmetric complex matrix by Householder
/// tridiagonalization. Odd dimension gives zero.
pub fn pfaffian(a: &CMat) -> Result<Complex64> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(Error::Domain("Pfaffian needs a square matrix".into()));
    }
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    for i in 0..n {
        for j in 0..=i {
            if (a[(i, j)] + a[(j, i)]).norm() > 1e-12 * scale {
                return Err(Error::Domain(format!("matrix is not antisymmetric at ({i}, {j})")));
            }
        }
    }
    if n % 2 == 1 {
        return Ok(ZERO);
    }
    let mut m = a.clone();
    let mut pf = ONE;
    let mut k = 0;
    while k + 1 < n {
        // Reflect x = m[k+1.., k] onto a multiple of e₁.
        let len = n - k - 1;
        let tail_norm_sq: f64 = (k + 2..n).map(|i| m[(i, k)].norm_sqr()).sum();
        if tail_norm_sq > 0.0 {
            let x0 = m[(k + 1, k)];
            let xnorm = (x0.norm_sqr() + tail_norm_sq).sqrt();
            let ph = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
            let mut v: Vec<Complex64> = (0..len).map(|t| m[(k + 1 + t, k)]).collect();
            v[0] += ph * xnorm;
            let vnorm_sq: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            let tau = 2.0 / vnorm_sq;
            // m ← P m Pᵀ with P = I − τ v v^H acting on indices k+1..n.
            for col in 0..n {
                let mut dot = ZERO;
                for t in 0..len {
                    dot += v[t].conj() * m[(k + 1 + t, col)];
                }
                for t in 0..len {
                    m[(k + 1 + t, col)] -= v[t] * dot * tau;
                }
            }
            // Pᵀ = I − τ v̄ vᵀ on the right.
            for row in 0..n {
                let mut dot = ZERO;
                for t in 0..len {
                    dot += m[(row, k + 1 + t)] * v[t].conj();
                }
                for t in 0..len {
                    m[(row, k + 1 + t)] -= dot * v[t] * tau;
                }
            }
            // det P = −1 for a nontrivial reflector.
            pf = -pf;
        }
        pf *= m[(k, k + 1)];
        k += 2;
    }
    Ok(pf)
}
