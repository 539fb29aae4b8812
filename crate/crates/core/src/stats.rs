//! Streaming estimators for complex Monte Carlo observables.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Welford accumulator for a complex observable, tracking the variances of the
/// real and imaginary parts and their covariance. Merging uses the pairwise
/// update of Chan et al., so partial accumulators from disjoint streams combine
/// into the same moments as a single pass (up to rounding, and exactly when
/// merged in a fixed order).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexAccumulator {
    count: u64,
    mean: Complex64,
    m2_re: f64,
    m2_im: f64,
    c_re_im: f64,
}

impl ComplexAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: Complex64) {
        self.count += 1;
        let n = self.count as f64;
        let d_old = x - self.mean;
        self.mean += d_old / n;
        let d_new = x - self.mean;
        self.m2_re += d_old.re * d_new.re;
        self.m2_im += d_old.im * d_new.im;
        self.c_re_im += d_old.re * d_new.im;
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        self.mean += delta * (nb / n);
        let f = na * nb / n;
        self.m2_re += other.m2_re + delta.re * delta.re * f;
        self.m2_im += other.m2_im + delta.im * delta.im * f;
        self.c_re_im += other.c_re_im + delta.re * delta.im * f;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Complex64 {
        self.mean
    }

    fn denom(&self) -> f64 {
        (self.count.max(2) - 1) as f64
    }

    pub fn var_re(&self) -> f64 {
        self.m2_re / self.denom()
    }

    pub fn var_im(&self) -> f64 {
        self.m2_im / self.denom()
    }

    pub fn cov_re_im(&self) -> f64 {
        self.c_re_im / self.denom()
    }

    pub fn stderr_re(&self) -> f64 {
        (self.var_re() / self.count.max(1) as f64).sqrt()
    }

    pub fn stderr_im(&self) -> f64 {
        (self.var_im() / self.count.max(1) as f64).sqrt()
    }
}

/// Median-of-means: block means are kept, and the estimate is the
/// componentwise median of them. Robust against the rare huge samples that
/// near-poles produce.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MedianOfMeans {
    blocks: Vec<ComplexAccumulator>,
}

impl MedianOfMeans {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_block(&mut self, block: ComplexAccumulator) {
        if block.count() > 0 {
            self.blocks.push(block);
        }
    }

    pub fn blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn estimate(&self) -> Option<Complex64> {
        if self.blocks.is_empty() {
            return None;
        }
        let mut re: Vec<f64> = self.blocks.iter().map(|b| b.mean().re).collect();
        let mut im: Vec<f64> = self.blocks.iter().map(|b| b.mean().im).collect();
        Some(Complex64::new(median(&mut re), median(&mut im)))
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(xs: &[Complex64]) -> (Complex64, f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<Complex64>() / n;
        let vr = xs.iter().map(|x| (x.re - mean.re).powi(2)).sum::<f64>() / (n - 1.0);
        let vi = xs.iter().map(|x| (x.im - mean.im).powi(2)).sum::<f64>() / (n - 1.0);
        let c = xs.iter().map(|x| (x.re - mean.re) * (x.im - mean.im)).sum::<f64>() / (n - 1.0);
        (mean, vr, vi, c)
    }

    #[test]
    fn matches_two_pass() {
        let xs: Vec<Complex64> = (0..100).map(|i| Complex64::new((i as f64).sin() * 3.0, (i as f64 * 0.7).cos() + 1e3)).collect();
        let mut acc = ComplexAccumulator::new();
        xs.iter().for_each(|x| acc.push(*x));
        let (m, vr, vi, c) = naive(&xs);
        assert!((acc.mean() - m).norm() < 1e-12);
        assert!((acc.var_re() - vr).abs() < 1e-10);
        assert!((acc.var_im() - vi).abs() < 1e-10);
        assert!((acc.cov_re_im() - c).abs() < 1e-10);
    }

    #[test]
    fn median_of_means_resists_outlier() {
        let mut mom = MedianOfMeans::new();
        for b in 0..9 {
            let mut acc = ComplexAccumulator::new();
            for i in 0..10 {
                let v = if b == 4 && i == 0 { 1e9 } else { 1.0 };
                acc.push(Complex64::new(v, 0.0));
            }
            mom.push_block(acc);
        }
        assert_eq!(mom.estimate().unwrap(), Complex64::new(1.0, 0.0));
    }

    proptest! {
        #[test]
        fn merge_equals_single_pass(xs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..200), cut in 0usize..200) {
            let xs: Vec<Complex64> = xs.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            let cut = cut.min(xs.len());
            let mut whole = ComplexAccumulator::new();
            xs.iter().for_each(|x| whole.push(*x));
            let mut left = ComplexAccumulator::new();
            let mut right = ComplexAccumulator::new();
            xs[..cut].iter().for_each(|x| left.push(*x));
            xs[cut..].iter().for_each(|x| right.push(*x));
            left.merge(&right);
            prop_assert_eq!(left.count(), whole.count());
            prop_assert!((left.mean() - whole.mean()).norm() < 1e-9);
            prop_assert!((left.var_re() - whole.var_re()).abs() < 1e-6 * whole.var_re().max(1.0));
            prop_assert!((left.var_im() - whole.var_im()).abs() < 1e-6 * whole.var_im().max(1.0));
            prop_assert!((left.cov_re_im() - whole.cov_re_im()).abs() < 1e-6 * whole.var_re().max(whole.var_im()).max(1.0));
        }
    }
}
