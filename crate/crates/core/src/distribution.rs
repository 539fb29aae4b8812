//! Exact finite-N distribution of the winding number at β = 2 for the trig
//! loop, `P(W) = C(N, m) r(m)` with `m = (W + N)/2`, where `r(m)` is the
//! probability that a given set of `m` eigenvalues lies inside the unit
//! circle and the rest outside.
//!
//! Summing the permutation formula for `r(m)` against the binomial factor
//! gives the coefficient of `x^m` in `Π_m (v_m + u_m x)`, a Poisson-binomial
//! law, which [`winding_pmf`] evaluates by convolution. [`r_direct`] keeps the
//! literal permutation sum as an oracle for small `N`.

use serde::{Deserialize, Serialize};

use crate::ensembles::{draw_with, SymmetryClass};
use crate::error::{Error, Result};
use crate::loops::LoopFunctions;
use crate::mc::{run_streams, McPlan};
use crate::specfun::{beta_pair, ln_binomial};
use crate::winding::{cayley_image, winding_number_count, BOUNDARY_TOL, WINDING_SIGN};

/// Largest `N` accepted by the permutation-sum oracle.
pub const R_DIRECT_MAX_N: usize = 8;

/// `u_m(N, 1)` for `m = 1, …, N`.
pub fn inside_probabilities(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    (1..=n).map(|m| beta_pair(m, n, 1.0).map(|p| p.u)).collect()
}

fn outside_probabilities(n: usize) -> Result<Vec<f64>> {
    (1..=n).map(|m| beta_pair(m, n, 1.0).map(|p| p.v)).collect()
}

fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    // Heap's algorithm
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// `r(m) = (1/N!) Σ_{ω ∈ S_N} Π_{i≤m} u_{ω(i)} Π_{i>m} v_{ω(i)}`, summed over
/// all permutations. Refuses `N >` [`R_DIRECT_MAX_N`].
pub fn r_direct(m: usize, n: usize) -> Result<f64> {
    if n > R_DIRECT_MAX_N {
        return Err(Error::OracleRefused(format!("permutation sum over S_{n} exceeds the N ≤ {R_DIRECT_MAX_N} limit")));
    }
    if m > n {
        return Err(Error::Domain(format!("inside count m = {m} exceeds N = {n}")));
    }
    let u = inside_probabilities(n)?;
    let v = outside_probabilities(n)?;
    let mut sum = 0.0;
    let mut count = 0u64;
    for_each_permutation(n, |w| {
        let inside: f64 = w[..m].iter().map(|&k| u[k]).product();
        let outside: f64 = w[m..].iter().map(|&k| v[k]).product();
        sum += inside * outside;
        count += 1;
    });
    Ok(sum / count as f64)
}

/// `P(W)` on `{−N, −N+2, …, N}` with its first two moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingPMF {
    pub n: usize,
    pub support: Vec<i64>,
    pub probs: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl WindingPMF {
    /// `P(W = w)`, zero off the support.
    pub fn prob(&self, w: i64) -> f64 {
        let n = self.n as i64;
        if w.abs() > n || (w + n) % 2 != 0 {
            return 0.0;
        }
        self.probs[((w + n) / 2) as usize]
    }
}

/// Distribution of the number of eigenvalues inside the unit circle,
/// `P(m) = [x^m] Π_k (v_k + u_k x)`, ascending in `m`.
pub fn inside_count_pmf(n: usize) -> Result<Vec<f64>> {
    let u = inside_probabilities(n)?;
    let v = outside_probabilities(n)?;
    let mut coef = vec![1.0];
    for (uk, vk) in u.iter().zip(&v) {
        let mut next = vec![0.0; coef.len() + 1];
        for (j, c) in coef.iter().enumerate() {
            next[j] += c * vk;
            next[j + 1] += c * uk;
        }
        coef = next;
    }
    let total: f64 = coef.iter().sum();
    if (total - 1.0).abs() >= 1e-9 {
        return Err(Error::Solver(format!("inside-count PMF sums to {total}")));
    }
    coef.iter_mut().for_each(|c| *c /= total);
    Ok(coef)
}

/// Exact `P(W)` through the Poisson-binomial convolution.
pub fn winding_pmf(n: usize) -> Result<WindingPMF> {
    let by_m = inside_count_pmf(n)?;
    let ni = n as i64;
    let mut pairs: Vec<(i64, f64)> = by_m.iter().enumerate().map(|(m, &p)| (WINDING_SIGN * (2 * m as i64 - ni), p)).collect();
    pairs.sort_by_key(|x| x.0);
    let support: Vec<i64> = pairs.iter().map(|x| x.0).collect();
    let probs: Vec<f64> = pairs.iter().map(|x| x.1).collect();
    let mean: f64 = support.iter().zip(&probs).map(|(w, p)| *w as f64 * p).sum();
    let variance = support.iter().zip(&probs).map(|(w, p)| (*w as f64 - mean).powi(2) * p).sum();
    Ok(WindingPMF { n, support, probs, mean, variance })
}

/// `C(N, m) · r(m)` for every `m`, from the permutation-sum oracle, indexed
/// like [`inside_count_pmf`].
pub fn pmf_by_permutations(n: usize) -> Result<Vec<f64>> {
    (0..=n).map(|m| Ok(ln_binomial(n, m).exp() * r_direct(m, n)?)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLimitRow {
    pub n: usize,
    pub variance: f64,
    /// `2√(N/π)`.
    pub predicted_variance: f64,
    pub ratio: f64,
    /// `sup_W |σ P(W)/2 − φ(W/σ)|`: the PMF as a density in the standardized
    /// variable against the unit normal density.
    pub sup_distance: f64,
}

/// Variance against `2√(N/π)` and the standardized distance to the normal
/// density for each `N`.
pub fn gaussian_limit_report(ns: &[usize]) -> Result<Vec<GaussianLimitRow>> {
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    ns.iter()
        .map(|&n| {
            if n < 2 {
                return Err(Error::Domain(format!("Gaussian limit needs N ≥ 2, got {n}")));
            }
            let pmf = winding_pmf(n)?;
            let sigma = pmf.variance.sqrt();
            let predicted = 2.0 * (n as f64 / std::f64::consts::PI).sqrt();
            let sup_distance = pmf
                .support
                .iter()
                .zip(&pmf.probs)
                .map(|(w, p)| (sigma * p / 2.0 - phi(*w as f64 / sigma)).abs())
                .fold(0.0, f64::max);
            Ok(GaussianLimitRow { n, variance: pmf.variance, predicted_variance: predicted, ratio: pmf.variance / predicted, sup_distance })
        })
        .collect()
}

/// Histogram of count-route winding numbers over Monte Carlo draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingHistogram {
    pub n: usize,
    pub support: Vec<i64>,
    pub counts: Vec<u64>,
    pub trials: u64,
    pub resamples: u64,
}

impl WindingHistogram {
    pub fn frequency(&self, idx: usize) -> f64 {
        self.counts[idx] as f64 / self.trials.max(1) as f64
    }

    /// Binomial standard error of each frequency.
    pub fn stderr(&self, idx: usize) -> f64 {
        let p = self.frequency(idx);
        (p * (1.0 - p) / self.trials.max(1) as f64).sqrt()
    }
}

/// Draws `plan.trials` AIII spectra and histograms the count-route winding
/// number. Draws with an eigenvalue on the counting boundary are redrawn.
pub fn mc_winding_histogram(n: usize, plan: &McPlan) -> Result<WindingHistogram> {
    let ni = n as i64;
    let support: Vec<i64> = (0..=n).map(|j| 2 * j as i64 - ni).collect();
    let off_boundary = |s: &crate::ensembles::SphericalSpectrum| {
        cayley_image(s).z.iter().all(|c| (c.norm() - 1.0).abs() >= BOUNDARY_TOL)
    };
    let per_stream = run_streams(plan, |key, draws| -> Result<(Vec<u64>, u64)> {
        let mut counts = vec![0u64; n + 1];
        let mut resamples = 0u64;
        for i in 0..draws {
            let d = draw_with(n, SymmetryClass::AIII, key, i, off_boundary)?;
            resamples += u64::from(d.resamples);
            let w = winding_number_count(&d.spectrum, &LoopFunctions::Trig)?;
            counts[((w + ni) / 2) as usize] += 1;
        }
        Ok((counts, resamples))
    });
    let mut counts = vec![0u64; n + 1];
    let mut resamples = 0;
    for r in per_stream {
        let (c, rs) = r?;
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        resamples += rs;
    }
    Ok(WindingHistogram { n, support, counts, trials: plan.trials, resamples })
}

/// Total-variation distance `½ Σ_W |P(W) − f(W)|`.
pub fn tv_distance(pmf: &WindingPMF, hist: &WindingHistogram) -> f64 {
    0.5 * hist
        .support
        .iter()
        .enumerate()
        .map(|(i, &w)| (pmf.prob(w) - hist.frequency(i)).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inside_small_cases() {
        assert!((inside_probabilities(1).unwrap()[0] - 0.5).abs() < 1e-15);
        let u = inside_probabilities(2).unwrap();
        assert!((u[0] - 0.75).abs() < 1e-15 && (u[1] - 0.25).abs() < 1e-15);
        for n in [3, 9, 40] {
            let u = inside_probabilities(n).unwrap();
            for m in 0..n {
                assert!((u[m] + u[n - 1 - m] - 1.0).abs() < 1e-12);
            }
        }
        assert!(inside_probabilities(0).is_err());
    }

    #[test]
    fn r_direct_small_cases() {
        assert!((r_direct(1, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((r_direct(0, 1).unwrap() - 0.5).abs() < 1e-15);
        for n in 1..=6 {
            let total: f64 = pmf_by_permutations(n).unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(matches!(r_direct(0, 9), Err(Error::OracleRefused(_))));
        assert!(r_direct(4, 3).is_err());
    }

    #[test]
    fn permutations_are_all_visited() {
        let mut seen = std::collections::HashSet::new();
        for_each_permutation(5, |w| {
            seen.insert(w.to_vec());
        });
        assert_eq!(seen.len(), 120);
    }

    #[test]
    fn convolution_equals_permutation_sum() {
        for n in 1..=R_DIRECT_MAX_N {
            let a = inside_count_pmf(n).unwrap();
            let b = pmf_by_permutations(n).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "N={n}");
            }
        }
    }

    #[test]
    fn n1_pmf() {
        let p = winding_pmf(1).unwrap();
        assert_eq!(p.support, vec![-1, 1]);
        assert!((p.probs[0] - 0.5).abs() < 1e-15 && (p.probs[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parity_and_lookup() {
        let p = winding_pmf(5).unwrap();
        assert_eq!(p.prob(2), 0.0);
        assert_eq!(p.prob(7), 0.0);
        assert_eq!(p.prob(3), p.probs[4]);
    }

    #[test]
    fn large_n_stays_normalized() {
        let p = winding_pmf(10_000).unwrap();
        assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.probs.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn gaussian_limit_trend() {
        let rows = gaussian_limit_report(&[10, 50, 100, 400]).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].variance > w[0].variance);
            assert!((w[1].ratio - 1.0).abs() < (w[0].ratio - 1.0).abs());
            assert!(w[1].sup_distance < w[0].sup_distance);
        }
        assert!((rows[3].ratio - 1.0).abs() < 0.1);
        assert!(gaussian_limit_report(&[1]).is_err());
    }

    #[test]
    fn histogram_tracks_pmf() {
        let hist = mc_winding_histogram(3, &McPlan::new(4, 4, 4000)).unwrap();
        assert_eq!(hist.counts.iter().sum::<u64>(), 4000);
        let pmf = winding_pmf(3).unwrap();
        for (i, &w) in hist.support.iter().enumerate() {
            assert!((hist.frequency(i) - pmf.prob(w)).abs() < 4.0 * hist.stderr(i).max(1e-3));
        }
        assert!(tv_distance(&pmf, &hist) < 0.03);
    }

    proptest! {
        #[test]
        fn pmf_invariants(n in 1usize..400) {
            let p = winding_pmf(n).unwrap();
            prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.probs.iter().all(|&x| x >= 0.0));
            prop_assert!(p.mean.abs() < 1e-12);
            let k = p.probs.len();
            for i in 0..k {
                prop_assert!((p.probs[i] - p.probs[k - 1 - i]).abs() < 1e-12);
            }
        }
    }
}
