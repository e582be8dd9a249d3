//! Spectral solver and Monte Carlo harness for the semilinear stochastic wave
//! equation on the unit sphere.
//!
//! The equation solved is the first-order-in-time system behind
//!
//! ```text
//! ∂ₜₜ u = Δ u + f(u) + g(u) Ẇ      on 𝕊² ⊂ ℝ³,
//! ```
//!
//! where `Δ` is the Laplace–Beltrami operator, `f` and `g` are Lipschitz
//! nonlinearities and `W` is an isotropic Q-Wiener process whose angular power
//! spectrum controls the noise smoothness. Space is discretised by a spectral
//! Galerkin truncation in real spherical harmonics; time is advanced either by
//! a stochastic trigonometric method (exact on the linear wave group) or by a
//! semi-implicit Euler comparator.
//!
//! Module layout:
//!
//! - [`harmonics`] — associated Legendre functions and the real/complex
//!   spherical-harmonic basis.
//! - [`fields`] — dense spectral coefficient fields, Sobolev norms,
//!   projections, and the position/velocity product state.
//! - [`grid`] — Gauss–Legendre × uniform-longitude quadrature grids and the
//!   synthesis/analysis transforms between coefficients and point values.
//! - [`propagator`] — the per-mode wave group `E(t)` and its trigonometric
//!   pieces, plus the semi-implicit resolvent.
//! - [`noise`] — truncated isotropic Q-Wiener increments with counter-based,
//!   schedule-independent sampling; restriction and time-coarsening for
//!   coupled refinement studies.
//! - [`model`] — problem descriptions: nonlinearity kinds, smoothness
//!   parameters, initial data.
//! - [`integrators`] — the trigonometric and semi-implicit steppers and the
//!   trajectory driver.
//! - [`experiments`] — coupled Monte Carlo convergence studies in space and
//!   time, rate fitting, and the empirical time-regularity probe.
//! - [`presets`] — ready-made configurations reproducing the reference
//!   experiment set.
//! - [`validate`] — a fast self-check suite wired to the CLI.
//!
//! With the default `parallel` feature, Monte Carlo samples fan out across a
//! rayon thread pool; results are aggregated in ascending sample order so that
//! outputs are bit-identical for any worker count, including the sequential
//! fallback built with `--no-default-features`.

pub mod experiments;
pub mod fields;
pub mod grid;
pub mod harmonics;
pub mod integrators;
pub mod model;
pub mod noise;
pub mod presets;
pub mod propagator;
pub mod validate;

/// Errors reported by the solver library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Two spectral objects with different truncation degrees were combined.
    #[error("truncation mismatch: expected degree {expected}, got {actual}")]
    TruncationMismatch { expected: usize, actual: usize },
    /// A transform was requested beyond the design degree of the grid.
    #[error("truncation {kappa} exceeds the grid design degree {design}")]
    TruncationExceedsGrid { kappa: usize, design: usize },
    /// A configuration value (or combination) is invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// A requested record time is not a multiple of the step size.
    #[error("record time {time} is not aligned with step size {h}")]
    MisalignedRecordTime { time: f64, h: f64 },
    /// A time-coarsening factor does not evenly divide the number of steps.
    #[error("coarsening factor {factor} does not divide {steps} steps")]
    IndivisibleCoarsening { factor: usize, steps: usize },
    /// A rate fit was requested with fewer than three usable points.
    #[error("rate fit needs at least 3 usable points, got {0}")]
    InsufficientPoints(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Formats a float with 17 significant digits, enough for an exact `f64`
/// round trip in text output.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
