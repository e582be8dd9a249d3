//! Problem definitions: nonlinear drift `f`, multiplicative noise map `g`,
//! smoothness parameters, and initial data.
//!
//! A problem instance couples the equation `∂ₜₜu = Δu + f(u) + g(u)·Ẇ` to
//! a truncation degree `κ`, a final time `T`, and the regularity parameters
//! `(β, δ, γ, α)`:
//!
//! - `β` is the initial-data smoothness index; `γ` controls the decay of the
//!   initial coefficients and must exceed `β + 1/2` for the data to lie in
//!   the degree-`β` Sobolev space,
//! - `δ` is the noise smoothness index; `α` controls the angular power
//!   spectrum decay and must exceed `2δ`.
//!
//! Unset `γ`/`α` default to their thresholds plus `10⁻⁶`.
//!
//! Coefficientwise maps act directly on coefficients (no quadrature grid
//! needed); pointwise maps go through synthesize → scalar map → analyze on
//! the problem's lazily built grid, so purely spectral problems never pay
//! for grid construction even at high truncation.

use crate::fields::{index_of, ProductState, SpectralField};
use crate::grid::{build_grid, QuadratureGrid};
use crate::noise::AngularPowerSpectrum;
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

/// Scalar nonlinearity kinds for the drift `f` and the noise map `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    /// `f ≡ 0`.
    Zero,
    /// Sine applied to each real and imaginary part of the complex
    /// coefficients (a spectral, mode-decoupled nonlinearity).
    CoefficientwiseSine,
    /// `x ↦ sin x` applied to point values.
    PointwiseSine,
    /// `x ↦ (1 + x)/(1 + x²)` applied to point values.
    PointwiseRational,
    /// `g = I` (additive noise); not valid as a drift.
    Identity,
}

impl Nonlinearity {
    /// Whether evaluation requires a quadrature grid.
    pub fn needs_grid(self) -> bool {
        matches!(self, Nonlinearity::PointwiseSine | Nonlinearity::PointwiseRational)
    }

    fn scalar_map(self) -> fn(f64) -> f64 {
        match self {
            Nonlinearity::PointwiseSine => f64::sin,
            Nonlinearity::PointwiseRational => |x| (1.0 + x) / (1.0 + x * x),
            _ => unreachable!("scalar map only defined for pointwise kinds"),
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Nonlinearity::Zero => "zero",
            Nonlinearity::CoefficientwiseSine => "coefficientwise-sine",
            Nonlinearity::PointwiseSine => "pointwise-sine",
            Nonlinearity::PointwiseRational => "pointwise-rational",
            Nonlinearity::Identity => "identity",
        };
        f.write_str(name)
    }
}

impl FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Nonlinearity::Zero),
            "coefficientwise-sine" => Ok(Nonlinearity::CoefficientwiseSine),
            "pointwise-sine" => Ok(Nonlinearity::PointwiseSine),
            "pointwise-rational" => Ok(Nonlinearity::PointwiseRational),
            "identity" => Ok(Nonlinearity::Identity),
            other => Err(Error::InvalidConfig(format!(
                "unknown nonlinearity '{other}' (expected zero, coefficientwise-sine, \
                 pointwise-sine, pointwise-rational, or identity)"
            ))),
        }
    }
}

/// Builder for [`ProblemSpec`]; unset `γ`/`α` take their threshold defaults.
#[derive(Debug, Clone)]
pub struct ProblemBuilder {
    pub kappa: usize,
    pub t_final: f64,
    pub f: Nonlinearity,
    pub g: Nonlinearity,
    pub beta: f64,
    pub delta: f64,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
}

impl Default for ProblemBuilder {
    fn default() -> Self {
        Self {
            kappa: 128,
            t_final: 1.0,
            f: Nonlinearity::CoefficientwiseSine,
            g: Nonlinearity::Identity,
            beta: 1.0,
            delta: 1.0,
            gamma: None,
            alpha: None,
        }
    }
}

/// Margin added to the `γ > β + 1/2` and `α > 2δ` thresholds by default.
const THRESHOLD_MARGIN: f64 = 1e-6;

impl ProblemBuilder {
    pub fn build(&self) -> Result<ProblemSpec> {
        if self.kappa == 0 {
            return Err(Error::InvalidConfig("truncation degree must be at least 1".into()));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "final time must be positive and finite, got {}",
                self.t_final
            )));
        }
        if self.f == Nonlinearity::Identity {
            return Err(Error::InvalidConfig(
                "identity is only meaningful as a noise map, not a drift".into(),
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "initial-data smoothness must be nonnegative, got {}",
                self.beta
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise smoothness must be positive, got {}",
                self.delta
            )));
        }
        let gamma = self.gamma.unwrap_or(self.beta + 0.5 + THRESHOLD_MARGIN);
        if !(gamma > self.beta + 0.5) {
            return Err(Error::InvalidConfig(format!(
                "initial decay exponent gamma = {gamma} must exceed beta + 1/2 = {}",
                self.beta + 0.5
            )));
        }
        let alpha = self.alpha.unwrap_or(2.0 * self.delta + THRESHOLD_MARGIN);
        if !(alpha > 2.0 * self.delta) {
            return Err(Error::InvalidConfig(format!(
                "spectrum exponent alpha = {alpha} must exceed 2·delta = {}",
                2.0 * self.delta
            )));
        }
        Ok(ProblemSpec {
            kappa: self.kappa,
            t_final: self.t_final,
            f: self.f,
            g: self.g,
            beta: self.beta,
            delta: self.delta,
            gamma,
            alpha,
            grid: OnceLock::new(),
        })
    }
}

/// A validated problem instance. The quadrature grid is built on first use
/// and cached; spectral-only problems never build one.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    kappa: usize,
    t_final: f64,
    f: Nonlinearity,
    g: Nonlinearity,
    beta: f64,
    delta: f64,
    gamma: f64,
    alpha: f64,
    grid: OnceLock<QuadratureGrid>,
}

impl ProblemSpec {
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn f(&self) -> Nonlinearity {
        self.f
    }

    pub fn g(&self) -> Nonlinearity {
        self.g
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The quadrature grid sized for this problem's truncation degree.
    pub fn grid(&self) -> &QuadratureGrid {
        self.grid.get_or_init(|| build_grid(self.kappa))
    }

    /// The same problem at a different truncation (fresh lazy grid).
    pub fn with_kappa(&self, kappa: usize) -> Result<ProblemSpec> {
        if kappa == 0 {
            return Err(Error::InvalidConfig("truncation degree must be at least 1".into()));
        }
        Ok(ProblemSpec { kappa, grid: OnceLock::new(), ..self.clone() })
    }

    /// Noise spectrum `A_0 = 1, A_ℓ = ℓ^{-α}` truncated at `kappa`.
    pub fn spectrum(&self, kappa: usize) -> AngularPowerSpectrum {
        AngularPowerSpectrum::power_law(self.alpha, kappa)
            .expect("validated alpha always yields a spectrum")
    }

    /// Drift evaluation with this problem's `f` (grid built only if needed).
    pub fn eval_f(&self, u: &SpectralField) -> Result<SpectralField> {
        match self.f {
            Nonlinearity::Zero => Ok(SpectralField::zeros(u.kappa())),
            Nonlinearity::CoefficientwiseSine => Ok(coefficientwise_sine(u)),
            _ => eval_f(self.f, u, self.grid()),
        }
    }

    /// Noise-increment map with this problem's `g`.
    pub fn apply_g_increment(&self, u: &SpectralField, dw: &SpectralField) -> Result<SpectralField> {
        match self.g {
            Nonlinearity::Identity => Ok(dw.project(u.kappa())),
            Nonlinearity::Zero => Ok(SpectralField::zeros(u.kappa())),
            _ => apply_g_increment(self.g, u, dw, self.grid()),
        }
    }

    /// Initial data determined by this problem's decay exponent.
    pub fn initial_state(&self) -> ProductState {
        initial_state(self.gamma, self.kappa)
    }
}

/// Sine applied to the real and imaginary parts of the complex coefficients.
///
/// In the real orthonormal basis the complex coefficient at `m > 0` has real
/// part `c_{l,m}/√2` and imaginary part `c_{l,-m}/√2`, so the map reduces to
/// `c ↦ √2·sin(c/√2)` on every `m ≠ 0` coefficient and `c ↦ sin c` at
/// `m = 0`. Because sine is odd, the conjugate-symmetry of the complex
/// coefficient table is preserved exactly and the result is again real.
fn coefficientwise_sine(u: &SpectralField) -> SpectralField {
    let mut out = SpectralField::zeros(u.kappa());
    let sqrt2 = std::f64::consts::SQRT_2;
    for (idx, (&c, o)) in u.coeffs().iter().zip(out.coeffs_mut()).enumerate() {
        let (_, m) = crate::fields::mode_of(idx);
        *o = if m == 0 { c.sin() } else { sqrt2 * (c / sqrt2).sin() };
    }
    out
}

fn pointwise_map(
    u: &SpectralField,
    map: fn(f64) -> f64,
    grid: &QuadratureGrid,
) -> Result<SpectralField> {
    let synth = grid.synthesize(u)?;
    grid.analyze(&synth.map(map), u.kappa())
}

/// Evaluates the drift `f(u)` as a spectral field at `u`'s truncation.
pub fn eval_f(f: Nonlinearity, u: &SpectralField, grid: &QuadratureGrid) -> Result<SpectralField> {
    match f {
        Nonlinearity::Zero => Ok(SpectralField::zeros(u.kappa())),
        Nonlinearity::CoefficientwiseSine => Ok(coefficientwise_sine(u)),
        Nonlinearity::PointwiseSine | Nonlinearity::PointwiseRational => {
            pointwise_map(u, f.scalar_map(), grid)
        }
        Nonlinearity::Identity => Err(Error::InvalidConfig(
            "identity is only meaningful as a noise map, not a drift".into(),
        )),
    }
}

/// Evaluates `P_κ(g(u)·dW)`: the noise increment pushed through the
/// multiplicative map and projected back to `u`'s truncation.
///
/// The increment is first restricted to `u`'s truncation, which is the
/// coupling convention used throughout the convergence studies: every solver
/// sees exactly the modes of the shared realization that its own resolution
/// retains.
pub fn apply_g_increment(
    g: Nonlinearity,
    u: &SpectralField,
    dw: &SpectralField,
    grid: &QuadratureGrid,
) -> Result<SpectralField> {
    let dw = dw.project(u.kappa());
    match g {
        Nonlinearity::Identity => Ok(dw),
        Nonlinearity::Zero => Ok(SpectralField::zeros(u.kappa())),
        Nonlinearity::CoefficientwiseSine => {
            let gu = coefficientwise_sine(u);
            let prod = grid.synthesize(&gu)?.pointwise_mul(&grid.synthesize(&dw)?)?;
            grid.analyze(&prod, u.kappa())
        }
        Nonlinearity::PointwiseSine | Nonlinearity::PointwiseRational => {
            let gu = grid.synthesize(u)?.map(g.scalar_map());
            let prod = gu.pointwise_mul(&grid.synthesize(&dw)?)?;
            grid.analyze(&prod, u.kappa())
        }
    }
}

/// Initial data `(u₀, v₀)` with zonal coefficients `u₀^{(ℓ,0)} = ℓ^{-γ}`,
/// `v₀^{(ℓ,0)} = ℓ^{-(γ-1)}` for `1 ≤ ℓ ≤ κ`, all other coefficients zero.
pub fn initial_state(gamma: f64, kappa: usize) -> ProductState {
    assert!(kappa >= 1, "initial data needs at least degree 1");
    let mut state = ProductState::zeros(kappa);
    for l in 1..=kappa {
        let idx = index_of(l, 0);
        state.u.coeffs_mut()[idx] = (l as f64).powf(-gamma);
        state.v.coeffs_mut()[idx] = (l as f64).powf(-(gamma - 1.0));
    }
    state
}
