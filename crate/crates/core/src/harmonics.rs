//! Associated Legendre functions and spherical harmonics on the unit sphere.
//!
//! Conventions used throughout the crate:
//!
//! - `assoc_legendre(l, m, x)` returns the associated Legendre function
//!   `P_{l,m}(x)` *with* the Condon–Shortley phase `(-1)^m`, so
//!   `P_{1,1}(x) = -sqrt(1 - x²)`.
//! - `normalized_legendre(l, m, theta)` returns
//!   `L_{l,m}(θ) = sqrt((2l+1)/(4π) · (l-m)!/(l+m)!) · P_{l,m}(cos θ)`,
//!   the colatitude part of the orthonormal complex harmonic.
//! - The complex harmonic is `Y_{l,m}(θ, φ) = L_{l,m}(θ) · e^{imφ}` for
//!   `m ≥ 0` and `Y_{l,m} = (-1)^m · conj(Y_{l,-m})` for `m < 0`; it is an
//!   eigenfunction of the Laplace–Beltrami operator with eigenvalue
//!   `-l(l+1)`.
//! - The real orthonormal basis stores, per degree `l`, the harmonic
//!   `Y_{l,0}`, the scaled real parts `√2 · Re Y_{l,m}` for `m > 0`, and the
//!   scaled imaginary parts `√2 · Im Y_{l,|m|}` for `m < 0`.
//!
//! Normalized values are produced by fully normalized recurrences (stable for
//! large degrees) rather than by post-scaling the unnormalized recurrence,
//! whose factorial ratio overflows long before the degrees used in practice.

use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Degree/order pair `(l, m)` with `|m| ≤ l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    l: usize,
    m: i32,
}

impl HarmonicIndex {
    /// Builds an index, rejecting orders with `|m| > l`.
    pub fn new(l: usize, m: i32) -> Result<Self> {
        if m.unsigned_abs() as usize > l {
            return Err(Error::Domain(format!("harmonic order |{m}| exceeds degree {l}")));
        }
        Ok(Self { l, m })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> i32 {
        self.m
    }
}

/// Point on the unit sphere in colatitude/longitude coordinates,
/// `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    theta: f64,
    phi: f64,
}

impl SphericalPoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(Error::Domain(format!("colatitude {theta} outside [0, π]")));
        }
        if !phi.is_finite() || !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::Domain(format!("longitude {phi} outside [0, 2π)")));
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Associated Legendre function `P_{l,m}(x)` with Condon–Shortley phase.
///
/// Uses the diagonal seed `P_{m,m}(x) = (-1)^m (2m-1)!! (1-x²)^{m/2}` and the
/// three-term upward recurrence
/// `(l-m) P_{l,m} = (2l-1) x P_{l-1,m} - (l+m-1) P_{l-2,m}`.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> Result<f64> {
    if m > l {
        return Err(Error::Domain(format!("order {m} exceeds degree {l}")));
    }
    if !x.is_finite() || x.abs() > 1.0 {
        return Err(Error::Domain(format!("argument {x} outside [-1, 1]")));
    }

    let somx2 = ((1.0 - x) * (1.0 + x)).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= -((2 * k - 1) as f64) * somx2;
    }
    if l == m {
        return Ok(pmm);
    }

    let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return Ok(pmmp1);
    }
    for ll in (m + 2)..=l {
        let pll = (x * (2 * ll - 1) as f64 * pmmp1 - (ll + m - 1) as f64 * pmm)
            / (ll - m) as f64;
        pmm = pmmp1;
        pmmp1 = pll;
    }
    Ok(pmmp1)
}

/// Fully normalized associated Legendre function
/// `L_{l,m}(θ) = sqrt((2l+1)/(4π) · (l-m)!/(l+m)!) · P_{l,m}(cos θ)`.
///
/// Computed by the normalized recurrences
/// `L_{m,m} = -sqrt((2m+1)/(2m)) · sin θ · L_{m-1,m-1}` (Condon–Shortley
/// phase folded in) and
/// `L_{l,m} = a_{l,m} (cos θ · L_{l-1,m} - b_{l,m} L_{l-2,m})` with
/// `a_{l,m} = sqrt((4l²-1)/(l²-m²))` and
/// `b_{l,m} = sqrt(((l-1)²-m²)/(4(l-1)²-1))`,
/// which stay well scaled at degrees where the factorial ratio overflows.
pub fn normalized_legendre(l: usize, m: usize, theta: f64) -> Result<f64> {
    if m > l {
        return Err(Error::Domain(format!("order {m} exceeds degree {l}")));
    }
    if !theta.is_finite() {
        return Err(Error::Domain(format!("colatitude {theta} is not finite")));
    }
    Ok(normalized_legendre_column(l, m, theta)[l - m])
}

/// Values `L_{l,m}(θ)` for `l = m, m+1, …, l_max` (in that order).
///
/// One column of the normalized recurrence; the grid transforms call this per
/// order and node so the whole table costs `O(l_max²)` per node.
pub fn normalized_legendre_column(l_max: usize, m: usize, theta: f64) -> Vec<f64> {
    assert!(m <= l_max, "order {m} exceeds max degree {l_max}");
    let (sin_t, cos_t) = theta.sin_cos();
    let mut out = Vec::with_capacity(l_max - m + 1);

    // Diagonal seed L_{m,m}.
    let mut diag = 0.5 / PI.sqrt(); // L_{0,0} = 1/sqrt(4π)
    for k in 1..=m {
        diag *= -(((2 * k + 1) as f64) / ((2 * k) as f64)).sqrt() * sin_t;
    }
    out.push(diag);
    if l_max == m {
        return out;
    }

    // First off-diagonal step: a_{m+1,m} = sqrt(2m+3), b term vanishes.
    let mut prev2 = diag;
    let mut prev1 = ((2 * m + 3) as f64).sqrt() * cos_t * diag;
    out.push(prev1);

    for l in (m + 2)..=l_max {
        let lf = l as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
            .sqrt();
        let next = a * (cos_t * prev1 - b * prev2);
        out.push(next);
        prev2 = prev1;
        prev1 = next;
    }
    out
}

/// Complex orthonormal spherical harmonic `Y_{l,m}(θ, φ)`.
pub fn sph_harm_complex(idx: HarmonicIndex, p: SphericalPoint) -> Complex64 {
    let m_abs = idx.m.unsigned_abs() as usize;
    // Safe: |m| ≤ l is enforced by the HarmonicIndex constructor.
    let lnorm = normalized_legendre_column(idx.l, m_abs, p.theta)[idx.l - m_abs];
    let phase = Complex64::from_polar(1.0, idx.m as f64 * p.phi);
    if idx.m >= 0 || m_abs % 2 == 0 {
        lnorm * phase
    } else {
        // Y_{l,-m} = (-1)^m conj(Y_{l,m}); the conjugate flips the phase sign,
        // which is already captured by m < 0 in `phase`.
        -lnorm * phase
    }
}

/// Real orthonormal spherical harmonic: `Y_{l,0}` for `m = 0`,
/// `√2 · Re Y_{l,m}` for `m > 0`, `√2 · Im Y_{l,|m|}` for `m < 0`.
pub fn sph_harm_real(idx: HarmonicIndex, p: SphericalPoint) -> f64 {
    let m_abs = idx.m.unsigned_abs() as usize;
    let lnorm = normalized_legendre_column(idx.l, m_abs, p.theta)[idx.l - m_abs];
    let sqrt2 = std::f64::consts::SQRT_2;
    match idx.m.cmp(&0) {
        std::cmp::Ordering::Equal => lnorm,
        std::cmp::Ordering::Greater => sqrt2 * lnorm * (idx.m as f64 * p.phi).cos(),
        std::cmp::Ordering::Less => sqrt2 * lnorm * (m_abs as f64 * p.phi).sin(),
    }
}
