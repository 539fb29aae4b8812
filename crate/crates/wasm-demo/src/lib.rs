//! Browser bindings: Kitaev curve and winding, the exact winding-number
//! distribution, and the unfolded two-point function. Results are JSON strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;
use windstat::correlators::{f2_limit, unfolded_c2};
use windstat::distribution::winding_pmf as exact_pmf;
use windstat::kitaev::{d_vector, phase_point, KitaevParams};

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn error_json(msg: impl std::fmt::Display) -> String {
    to_json(&serde_json::json!({ "error": msg.to_string() }))
}

#[derive(Serialize)]
struct KitaevCurve {
    dy: Vec<f64>,
    dz: Vec<f64>,
    /// `null` at a phase transition.
    w: Option<i64>,
    gap: f64,
}

/// `(d_y, d_z)` over one Brillouin zone at `samples` points, with the winding
/// number and the gap.
#[wasm_bindgen]
pub fn kitaev_curve(t: f64, mu: f64, delta: f64, samples: usize) -> String {
    let params = KitaevParams::new(t, mu, delta);
    let samples = samples.clamp(8, 1 << 16);
    let (dy, dz) = (0..=samples)
        .map(|j| {
            let d = d_vector(&params, std::f64::consts::TAU * j as f64 / samples as f64);
            (d.dy, d.dz)
        })
        .unzip();
    match phase_point(&params) {
        Ok(pt) => to_json(&KitaevCurve { dy, dz, w: pt.w, gap: pt.gap }),
        Err(e) => error_json(e),
    }
}

#[derive(Serialize)]
struct Pmf {
    support: Vec<i64>,
    probs: Vec<f64>,
    variance: f64,
    /// `2√(N/π)`.
    predicted_variance: f64,
}

/// Exact `P(W)` for β = 2.
#[wasm_bindgen]
pub fn winding_pmf(n: usize) -> String {
    match exact_pmf(n) {
        Ok(p) => to_json(&Pmf {
            predicted_variance: 2.0 * (n as f64 / std::f64::consts::PI).sqrt(),
            support: p.support,
            probs: p.probs,
            variance: p.variance,
        }),
        Err(e) => error_json(e),
    }
}

#[derive(Serialize)]
struct Unfolded {
    delta: Vec<f64>,
    value: Vec<f64>,
    limit: Vec<f64>,
}

/// Unfolded two-point function at `samples` separations in `[lo, hi]` and its
/// large-N limit.
#[wasm_bindgen]
pub fn unfolded_series(n: usize, alpha: f64, lo: f64, hi: f64, samples: usize) -> String {
    if n == 0 || samples < 2 || !(lo < hi) {
        return error_json("need N ≥ 1, at least 2 samples and lo < hi");
    }
    let delta: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
    let value = delta.iter().map(|&d| unfolded_c2(n, alpha, d, 0.0).value).collect();
    let limit = delta.iter().map(|&d| f2_limit(alpha, d, 0.0)).collect();
    to_json(&Unfolded { delta, value, limit })
}
