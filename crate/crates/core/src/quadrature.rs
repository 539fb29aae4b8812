//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used as the independent "direct integration" route for the inside/outside
//! weights in [`crate::specfun`]; the fast path there is a continued fraction.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the 7-point rule (nodes are XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

const MAX_INTERVALS: usize = 4000;

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by globally
/// adaptive bisection: the interval with the largest error estimate is split
/// until the summed estimate is below `tol`, below the rounding floor of the
/// result, or the interval budget runs out. Returns `(value, error_estimate)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let piece = |lo: f64, hi: f64| {
        let (value, err) = gk15(&f, lo, hi);
        Piece { lo, hi, value, err }
    };
    let mut heap = std::collections::BinaryHeap::new();
    let first = piece(a, b);
    let (mut total, mut err) = (first.value, first.err);
    heap.push(first);
    while err > tol && err > 1e-14 * total.abs() && heap.len() < MAX_INTERVALS {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            break;
        }
        let left = piece(worst.lo, mid);
        let right = piece(mid, worst.hi);
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let total = heap.iter().map(|p| p.value).sum();
    let err = heap.iter().map(|p| p.err).sum();
    (total, err)
}

/// Integrates `f` over `[a, ∞)` with `a > 0` via the substitution `x = 1/t`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> (f64, f64) {
    assert!(a > 0.0, "lower limit must be positive for the 1/t map");
    integrate(
        |t| {
            if t == 0.0 {
                0.0
            } else {
                f(1.0 / t) / (t * t)
            }
        },
        0.0,
        1.0 / a,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-13);
        // [x^6/6 - x^3 + x] from -1 to 2
        let exact = (64.0 / 6.0 - 8.0 + 2.0) - (1.0 / 6.0 + 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn tail_integral() {
        let (v, _) = integrate_to_infinity(|x| 1.0 / (1.0 + x * x), 1.0, 1e-13);
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand() {
        let (v, _) = integrate(|x| (-1e4 * (x - 0.3).powi(2)).exp(), 0.0, 1.0, 1e-14);
        let exact = (std::f64::consts::PI / 1e4).sqrt();
        assert!((v - exact).abs() < 1e-12);
    }
}
