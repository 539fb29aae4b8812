use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// `b(p) = 0` or `κ(p) + z_n ≈ 0`: the spectral route is singular here.
    #[error("pole at p = {p}")]
    Pole { p: f64 },

    /// `K₁` is too ill-conditioned for the spectrum to be trusted; redraw.
    #[error("resample: condition estimate {cond:.3e} exceeds limit")]
    Resample { cond: f64 },

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error("K(p) is singular at p = {p}")]
    DegenerateLoop { p: f64 },

    #[error("contour value {value} not quantized (residual {residual:.3e}) at grid {grid}")]
    NotQuantized {
        value: f64,
        residual: f64,
        grid: usize,
    },

    #[error("winding routes disagree: contour {contour}, count {count}")]
    RouteMismatch { contour: i64, count: i64 },

    #[error("gap {gap:.3e} closed: phase transition point")]
    PhaseTransition { gap: f64 },

    #[error("points too close to coincide: {0}")]
    NearCoincident(String),

    #[error("finite-difference step unstable: Richardson levels differ by {diff:.3e}")]
    StepSize { diff: f64 },

    #[error("oracle refused: {0}")]
    OracleRefused(String),
}
