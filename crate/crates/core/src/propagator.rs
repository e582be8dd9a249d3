//! Per-mode action of the free wave group and of the semi-implicit
//! resolvent.
//!
//! In the spherical-harmonic basis the Laplace–Beltrami operator is diagonal
//! with eigenvalues `-λ_l`, `λ_l = l(l+1)`, so the first-order system
//! `d/dt (u, v) = A (u, v)` with `A = [[0, I], [Δ, 0]]` decouples into 2×2
//! blocks per degree. With `ω = √λ_l` the group block is
//!
//! ```text
//! E_l(t) = [[cos ωt,     sin(ωt)/ω],
//!           [-ω sin ωt,  cos ωt   ]]        (l ≥ 1)
//! E_0(t) = [[1, t], [0, 1]]                 (l = 0, exact limit)
//! ```
//!
//! The `l = 0` block is the exact `ω → 0` limit, written out rather than
//! approximated through a sinc guard so no spurious rounding enters the
//! constant mode. All blocks have determinant 1, hence `E(-t)` inverts
//! `E(t)` and the per-mode energy `λ u² + v²` is conserved.
//!
//! The semi-implicit comparator scheme needs `(I - hA_l)^{-1}`, which is
//! `1/(1 + h²λ) · [[1, h], [-hλ, 1]]` per block.

use crate::fields::{index_of, ProductState, SpectralField};

/// One 2×2 block acting on a single (degree, order) pair of coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMatrix {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl ModeMatrix {
    #[inline]
    pub fn apply(&self, u: f64, v: f64) -> (f64, f64) {
        (self.a11 * u + self.a12 * v, self.a21 * u + self.a22 * v)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn matmul(&self, rhs: &ModeMatrix) -> ModeMatrix {
        ModeMatrix {
            a11: self.a11 * rhs.a11 + self.a12 * rhs.a21,
            a12: self.a11 * rhs.a12 + self.a12 * rhs.a22,
            a21: self.a21 * rhs.a11 + self.a22 * rhs.a21,
            a22: self.a21 * rhs.a12 + self.a22 * rhs.a22,
        }
    }
}

/// Eigenvalue `λ_l = l(l+1)` of `-Δ` on degree-`l` harmonics.
#[inline]
pub fn laplace_eigenvalue(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

/// Wave-group block `E_l(t)`.
pub fn group_mode_matrix(l: usize, t: f64) -> ModeMatrix {
    if l == 0 {
        return ModeMatrix { a11: 1.0, a12: t, a21: 0.0, a22: 1.0 };
    }
    let omega = laplace_eigenvalue(l).sqrt();
    let (s, c) = (omega * t).sin_cos();
    ModeMatrix { a11: c, a12: s / omega, a21: -omega * s, a22: c }
}

/// Resolvent block `(I - hA_l)^{-1}` of the semi-implicit scheme.
pub fn si_mode_matrix(l: usize, h: f64) -> ModeMatrix {
    assert!(h > 0.0, "semi-implicit resolvent needs a positive step");
    let lambda = laplace_eigenvalue(l);
    let scale = 1.0 / (1.0 + h * h * lambda);
    ModeMatrix {
        a11: scale,
        a12: scale * h,
        a21: -scale * h * lambda,
        a22: scale,
    }
}

/// Applies the wave group `E(t)` to a state, block by block.
pub fn apply_group(x: &ProductState, t: f64) -> ProductState {
    let kappa = x.kappa();
    let mut out = ProductState::zeros(kappa);
    for l in 0..=kappa {
        let m = group_mode_matrix(l, t);
        for mm in -(l as i32)..=(l as i32) {
            let idx = index_of(l, mm);
            let (u, v) = m.apply(x.u.coeffs()[idx], x.v.coeffs()[idx]);
            out.u.coeffs_mut()[idx] = u;
            out.v.coeffs_mut()[idx] = v;
        }
    }
    out
}

/// The three scalar operators appearing in the group blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigKind {
    /// `cos(ω t)` per mode; norm-contractive in every Sobolev index.
    Cosine,
    /// `sin(ω t)/ω` per mode (`t` at `l = 0`); smooths by one index.
    ScaledSine,
    /// `ω sin(ω t)` per mode (`0` at `l = 0`); costs one index.
    DerivSine,
}

/// Applies one of the diagonal trigonometric operators to a field.
pub fn apply_trig(kind: TrigKind, u: &SpectralField, t: f64) -> SpectralField {
    let kappa = u.kappa();
    let mut out = SpectralField::zeros(kappa);
    for l in 0..=kappa {
        let factor = if l == 0 {
            match kind {
                TrigKind::Cosine => 1.0,
                TrigKind::ScaledSine => t,
                TrigKind::DerivSine => 0.0,
            }
        } else {
            let omega = laplace_eigenvalue(l).sqrt();
            match kind {
                TrigKind::Cosine => (omega * t).cos(),
                TrigKind::ScaledSine => (omega * t).sin() / omega,
                TrigKind::DerivSine => omega * (omega * t).sin(),
            }
        };
        for mm in -(l as i32)..=(l as i32) {
            let idx = index_of(l, mm);
            out.coeffs_mut()[idx] = factor * u.coeffs()[idx];
        }
    }
    out
}
