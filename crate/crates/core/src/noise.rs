//! Isotropic Q-Wiener increments on the sphere, plus the mode-restriction
//! and time-coarsening views used to couple reference and coarse solvers to
//! one Brownian realization.
//!
//! Every Gaussian draw is a pure function of `(base seed, sample index, fine
//! step, mode index)` through a splitmix-style counter hash, so paths are
//! reproducible regardless of evaluation order or thread schedule, and a
//! path sampled directly at truncation `κ` is bit-identical to the
//! restriction of a path sampled at any larger truncation. `NoisePath` is a
//! cheap view over that deterministic stream: restriction and coarsening
//! adjust metadata only, and increments are generated on demand, so
//! long/high-resolution paths never need to be materialized in memory.
//!
//! In the real orthonormal basis the Karhunen–Loève expansion reduces to one
//! independent `Normal(0, A_ℓ h)` increment per basis function, with `A_ℓ`
//! the angular power spectrum of the covariance operator.

use crate::fields::{index_of, modes, SpectralField};
use crate::{fmt_f64, Error, Result};
use std::f64::consts::PI;
use std::io::Write;

/// Finalizer of the splitmix64 generator; a strong 64-bit mixing function.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based stream: one well-mixed word per (base, sample, step, lane).
#[inline]
fn stream(base: u64, sample: u64, step: u64, lane: u64) -> u64 {
    let mut z = mix64(base ^ 0x9e37_79b9_7f4a_7c15);
    z = mix64(z ^ sample.wrapping_mul(0xd134_2543_de82_ef95));
    z = mix64(z ^ step.wrapping_mul(0xaf25_1af3_b0f0_25b5));
    z = mix64(z ^ lane.wrapping_mul(0x2545_f491_4f6c_dd1d));
    mix64(z)
}

/// Maps a word to the open interval (0, 1) with full 53-bit resolution.
#[inline]
fn to_open_unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw for one (step, mode) counter via Box–Muller.
#[inline]
fn standard_normal(base: u64, sample: u64, step: u64, mode: u64) -> f64 {
    let u1 = to_open_unit(stream(base, sample, step, 2 * mode));
    let u2 = to_open_unit(stream(base, sample, step, 2 * mode + 1));
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Angular power spectrum `ℓ ↦ A_ℓ ≥ 0` of the noise covariance, stored up
/// to a fixed truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularPowerSpectrum {
    values: Vec<f64>,
}

impl AngularPowerSpectrum {
    /// Spectrum from explicit per-degree values `A_0, …, A_κ`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("power spectrum needs at least degree 0".into()));
        }
        if let Some(bad) = values.iter().find(|a| !a.is_finite() || **a < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "power spectrum entries must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self { values })
    }

    /// Polynomially decaying spectrum `A_0 = 1`, `A_ℓ = ℓ^{-α}`.
    pub fn power_law(alpha: f64, kappa: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "power-law exponent must be positive, got {alpha}"
            )));
        }
        let values = (0..=kappa)
            .map(|l| if l == 0 { 1.0 } else { (l as f64).powf(-alpha) })
            .collect();
        Ok(Self { values })
    }

    /// Largest degree the spectrum covers.
    pub fn kappa(&self) -> usize {
        self.values.len() - 1
    }

    pub fn value(&self, l: usize) -> f64 {
        self.values[l]
    }

    /// Trace of the covariance restricted to degrees `≤ κ`:
    /// `Σ_{ℓ=0}^{κ} (2ℓ+1) A_ℓ`.
    pub fn trace(&self, kappa: usize) -> f64 {
        assert!(kappa <= self.kappa(), "trace degree exceeds spectrum truncation");
        (0..=kappa).map(|l| (2 * l + 1) as f64 * self.values[l]).sum()
    }
}

/// One sample path of coefficient increments, addressed by (step, mode).
///
/// The path is a view: `restrict_modes` and `coarsen_time` share the
/// underlying stream and only change which modes are visible and how many
/// fine increments are summed per step. Increments are regenerated on
/// demand; two calls with equal parameters are bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    base: u64,
    sample: u64,
    spectrum: AngularPowerSpectrum,
    kappa: usize,
    fine_h: f64,
    fine_steps: usize,
    /// Number of consecutive fine increments summed per visible step.
    factor: usize,
}

/// Draws the sample path identified by `(base, sample)` with `steps`
/// increments of size `h` at truncation `kappa`.
pub fn sample_path(
    base: u64,
    sample: u64,
    spectrum: &AngularPowerSpectrum,
    kappa: usize,
    h: f64,
    steps: usize,
) -> NoisePath {
    assert!(h > 0.0, "noise step size must be positive");
    assert!(
        kappa <= spectrum.kappa(),
        "path truncation {kappa} exceeds spectrum truncation {}",
        spectrum.kappa()
    );
    NoisePath {
        base,
        sample,
        spectrum: spectrum.clone(),
        kappa,
        fine_h: h,
        fine_steps: steps,
        factor: 1,
    }
}

impl NoisePath {
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Step size of this view (fine step × coarsening factor).
    pub fn h(&self) -> f64 {
        self.fine_h * self.factor as f64
    }

    /// Number of increments in this view.
    pub fn steps(&self) -> usize {
        self.fine_steps / self.factor
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn sample(&self) -> u64 {
        self.sample
    }

    pub fn spectrum(&self) -> &AngularPowerSpectrum {
        &self.spectrum
    }

    /// The `n`-th increment of this view: the ascending-order sum of the
    /// underlying fine increments it covers.
    pub fn increment(&self, n: usize) -> SpectralField {
        assert!(n < self.steps(), "increment index {n} out of range {}", self.steps());
        let scale: Vec<f64> = (0..=self.kappa)
            .map(|l| (self.spectrum.value(l) * self.fine_h).sqrt())
            .collect();
        let mut out = SpectralField::zeros(self.kappa);
        let coeffs = out.coeffs_mut();
        for fine in (n * self.factor)..((n + 1) * self.factor) {
            for (l, m) in modes(self.kappa) {
                let idx = index_of(l, m);
                coeffs[idx] +=
                    scale[l] * standard_normal(self.base, self.sample, fine as u64, idx as u64);
            }
        }
        out
    }

    /// View of the same realization keeping only degrees `≤ κ`; retained
    /// coefficients are bit-identical.
    pub fn restrict_modes(&self, kappa: usize) -> NoisePath {
        assert!(kappa <= self.kappa, "restriction degree {kappa} exceeds path degree {}", self.kappa);
        NoisePath { kappa, ..self.clone() }
    }

    /// View of the same realization with step size multiplied by `factor`;
    /// each visible increment sums `factor` consecutive fine increments.
    pub fn coarsen_time(&self, factor: usize) -> Result<NoisePath> {
        let steps = self.steps();
        if factor == 0 || steps % factor != 0 {
            return Err(Error::IndivisibleCoarsening { factor, steps });
        }
        Ok(NoisePath { factor: self.factor * factor, ..self.clone() })
    }

    /// Writes all increments as CSV with header `step,l,m,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,l,m,value")?;
        for n in 0..self.steps() {
            let inc = self.increment(n);
            for (l, m) in modes(self.kappa) {
                writeln!(w, "{n},{l},{m},{}", fmt_f64(inc.coeff(l, m)))?;
            }
        }
        Ok(())
    }
}
