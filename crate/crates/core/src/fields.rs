//! Dense spectral fields in the real spherical-harmonic basis.
//!
//! A [`SpectralField`] of truncation degree `κ` stores the `(κ+1)²` real
//! coefficients of an expansion in the orthonormal real basis, flattened so
//! that the coefficient of degree `l` and order `m` (`-l ≤ m ≤ l`) sits at
//! index `l² + l + m`. Sobolev norms weight each degree by `(1 + l(l+1))^s`;
//! the position/velocity pair of the wave system lives in the product space
//! with norm `‖(u,v)‖²_s = ‖u‖²_s + ‖v‖²_{s-1}`.

use crate::{fmt_f64, Error, Result};
use std::io::Write;

/// Flat storage index of degree `l`, order `m` (`|m| ≤ l`): `l² + l + m`.
#[inline]
pub fn index_of(l: usize, m: i32) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    l * l + (l as i64 + m as i64) as usize
}

/// Inverse of [`index_of`]: the `(l, m)` pair stored at a flat index.
#[inline]
pub fn mode_of(index: usize) -> (usize, i32) {
    let l = (index as f64).sqrt() as usize;
    // Guard against rounding at perfect squares.
    let l = if l * l > index { l - 1 } else { l };
    let m = index as i64 - (l * l + l) as i64;
    (l, m as i32)
}

/// Number of coefficients kept by a degree-`κ` truncation.
#[inline]
pub fn coeff_count(kappa: usize) -> usize {
    (kappa + 1) * (kappa + 1)
}

/// Iterates `(l, m)` pairs in flat-index order for degrees `0..=κ`.
pub fn modes(kappa: usize) -> impl Iterator<Item = (usize, i32)> {
    (0..=kappa).flat_map(|l| (-(l as i32)..=l as i32).map(move |m| (l, m)))
}

/// Real spectral coefficients of a scalar field, truncated at degree `κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    kappa: usize,
    coeffs: Vec<f64>,
}

impl SpectralField {
    /// The zero field at truncation `κ`.
    pub fn zeros(kappa: usize) -> Self {
        Self { kappa, coeffs: vec![0.0; coeff_count(kappa)] }
    }

    /// Wraps a flat coefficient vector; its length must be `(κ+1)²` and all
    /// entries finite.
    pub fn from_coeffs(kappa: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != coeff_count(kappa) {
            return Err(Error::InvalidConfig(format!(
                "coefficient vector of length {} does not match truncation {kappa} (need {})",
                coeffs.len(),
                coeff_count(kappa)
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite spectral coefficient".into()));
        }
        Ok(Self { kappa, coeffs })
    }

    /// The basis field `e_{l,m}` (single unit coefficient).
    pub fn basis(kappa: usize, l: usize, m: i32) -> Result<Self> {
        if l > kappa || m.unsigned_abs() as usize > l {
            return Err(Error::Domain(format!(
                "mode ({l},{m}) outside truncation {kappa}"
            )));
        }
        let mut f = Self::zeros(kappa);
        f.coeffs[index_of(l, m)] = 1.0;
        Ok(f)
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Coefficient of mode `(l, m)`. Panics if the mode lies outside the
    /// truncation (a programming error rather than a data error).
    pub fn coeff(&self, l: usize, m: i32) -> f64 {
        assert!(l <= self.kappa && m.unsigned_abs() as usize <= l);
        self.coeffs[index_of(l, m)]
    }

    pub fn set_coeff(&mut self, l: usize, m: i32, value: f64) {
        assert!(l <= self.kappa && m.unsigned_abs() as usize <= l);
        self.coeffs[index_of(l, m)] = value;
    }

    /// Sobolev norm `‖u‖_s = sqrt(Σ_{l,m} (1 + l(l+1))^s · u_{l,m}²)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let mut sum = 0.0;
        for l in 0..=self.kappa {
            let weight = if s == 0.0 { 1.0 } else { (1.0 + (l * (l + 1)) as f64).powf(s) };
            let start = l * l;
            let end = start + 2 * l + 1;
            let block: f64 = self.coeffs[start..end].iter().map(|c| c * c).sum();
            sum += weight * block;
        }
        sum.sqrt()
    }

    /// Projection onto degrees `≤ κ_new`: truncates high modes or zero-pads.
    pub fn project(&self, kappa_new: usize) -> SpectralField {
        let mut out = SpectralField::zeros(kappa_new);
        let n = coeff_count(self.kappa.min(kappa_new));
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    /// `a·x + b·y` for fields of equal truncation.
    pub fn linear_combine(a: f64, x: &SpectralField, b: f64, y: &SpectralField) -> Result<SpectralField> {
        if x.kappa != y.kappa {
            return Err(Error::TruncationMismatch { expected: x.kappa, actual: y.kappa });
        }
        let coeffs = x
            .coeffs
            .iter()
            .zip(&y.coeffs)
            .map(|(xc, yc)| a * xc + b * yc)
            .collect();
        Ok(SpectralField { kappa: x.kappa, coeffs })
    }

    /// In-place `self += a·other` (equal truncations).
    pub fn add_scaled(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        if self.kappa != other.kappa {
            return Err(Error::TruncationMismatch { expected: self.kappa, actual: other.kappa });
        }
        for (s, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *s += a * o;
        }
        Ok(())
    }

    /// Writes the coefficients as CSV with header `l,m,value`
    /// (17 significant digits).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "l,m,value")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (l, m) = mode_of(i);
            writeln!(w, "{l},{m},{}", fmt_f64(*c))?;
        }
        Ok(())
    }
}

/// Position/velocity pair `(u, v)` at a common truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub u: SpectralField,
    pub v: SpectralField,
}

impl ProductState {
    pub fn new(u: SpectralField, v: SpectralField) -> Result<Self> {
        if u.kappa != v.kappa {
            return Err(Error::TruncationMismatch { expected: u.kappa, actual: v.kappa });
        }
        Ok(Self { u, v })
    }

    pub fn zeros(kappa: usize) -> Self {
        Self { u: SpectralField::zeros(kappa), v: SpectralField::zeros(kappa) }
    }

    pub fn kappa(&self) -> usize {
        self.u.kappa
    }

    /// Product norm `sqrt(‖u‖²_s + ‖v‖²_{s-1})`; `s = 0` is the energy-space
    /// norm used for error measurement.
    pub fn product_norm(&self, s: f64) -> f64 {
        let nu = self.u.sobolev_norm(s);
        let nv = self.v.sobolev_norm(s - 1.0);
        nu.hypot(nv)
    }

    pub fn project(&self, kappa_new: usize) -> ProductState {
        ProductState { u: self.u.project(kappa_new), v: self.v.project(kappa_new) }
    }

    pub fn linear_combine(a: f64, x: &ProductState, b: f64, y: &ProductState) -> Result<ProductState> {
        Ok(ProductState {
            u: SpectralField::linear_combine(a, &x.u, b, &y.u)?,
            v: SpectralField::linear_combine(a, &x.v, b, &y.v)?,
        })
    }
}

/// Sobolev norm of `fine - pad(coarse)` without materialising the padded
/// field; `coarse` must not exceed `fine` in truncation.
pub fn field_error_norm(fine: &SpectralField, coarse: &SpectralField, s: f64) -> Result<f64> {
    if coarse.kappa() > fine.kappa() {
        return Err(Error::TruncationMismatch { expected: fine.kappa(), actual: coarse.kappa() });
    }
    let mut sum = 0.0;
    for l in 0..=fine.kappa() {
        let weight = if s == 0.0 { 1.0 } else { (1.0 + (l * (l + 1)) as f64).powf(s) };
        let start = l * l;
        let end = start + 2 * l + 1;
        let block: f64 = if l <= coarse.kappa() {
            fine.coeffs[start..end]
                .iter()
                .zip(&coarse.coeffs[start..end])
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        } else {
            fine.coeffs[start..end].iter().map(|c| c * c).sum()
        };
        sum += weight * block;
    }
    Ok(sum.sqrt())
}

/// Product norm of `fine - pad(coarse)`: position part at index `s`,
/// velocity part at `s - 1`.
pub fn truncation_error_norm(fine: &ProductState, coarse: &ProductState, s: f64) -> Result<f64> {
    let nu = field_error_norm(&fine.u, &coarse.u, s)?;
    let nv = field_error_norm(&fine.v, &coarse.v, s - 1.0)?;
    Ok(nu.hypot(nv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn index_layout_is_degree_major() {
        assert_eq!(index_of(0, 0), 0);
        assert_eq!(index_of(1, -1), 1);
        assert_eq!(index_of(1, 0), 2);
        assert_eq!(index_of(1, 1), 3);
        assert_eq!(index_of(2, -2), 4);
        for idx in 0..coeff_count(9) {
            let (l, m) = mode_of(idx);
            assert_eq!(index_of(l, m), idx);
        }
        let listed: Vec<_> = modes(2).collect();
        assert_eq!(listed.len(), coeff_count(2));
        assert_eq!(listed[0], (0, 0));
        assert_eq!(listed[4], (2, -2));
    }

    #[test]
    fn construction_validates_shape_and_finiteness() {
        assert!(SpectralField::from_coeffs(1, vec![0.0; 3]).is_err());
        assert!(SpectralField::from_coeffs(1, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(SpectralField::basis(2, 3, 0).is_err());
        assert!(SpectralField::basis(2, 1, 2).is_err());
        let f = SpectralField::basis(2, 1, -1).unwrap();
        assert_eq!(f.coeff(1, -1), 1.0);
        assert_eq!(f.coeffs().len(), 9);
    }

    #[test]
    fn sobolev_norm_frozen_values() {
        let e10 = SpectralField::basis(4, 1, 0).unwrap();
        // weight (1 + 1·2)^1 = 3
        assert_abs_diff_eq!(e10.sobolev_norm(1.0), 3.0_f64.sqrt(), epsilon = TOL);
        assert_abs_diff_eq!(e10.sobolev_norm(0.0), 1.0, epsilon = TOL);

        let mut u = SpectralField::zeros(4);
        u.set_coeff(1, 0, 1.0);
        u.set_coeff(2, 0, 1.0);
        // s = -1: 1/(1+2) + 1/(1+6)
        assert_abs_diff_eq!(
            u.sobolev_norm(-1.0),
            (1.0 / 3.0_f64 + 1.0 / 7.0).sqrt(),
            epsilon = TOL
        );
    }

    #[test]
    fn product_norm_frozen_values() {
        let zero = SpectralField::zeros(3);
        let e10 = SpectralField::basis(3, 1, 0).unwrap();
        // X = (0, e_{1,0}), s = 0: ‖v‖_{-1} = (1+2)^{-1/2}
        let x = ProductState::new(zero, e10.clone()).unwrap();
        assert_abs_diff_eq!(x.product_norm(0.0), (1.0 / 3.0_f64).sqrt(), epsilon = TOL);
        // X = (e_{1,0}, e_{1,0}), s = 1: ‖u‖²_1 + ‖v‖²_0 = 3 + 1
        let y = ProductState::new(e10.clone(), e10).unwrap();
        assert_abs_diff_eq!(y.product_norm(1.0), 2.0, epsilon = TOL);
    }

    #[test]
    fn projection_truncates_and_pads() {
        let mut f = SpectralField::zeros(3);
        for (i, (l, m)) in modes(3).enumerate() {
            f.set_coeff(l, m, (i + 1) as f64);
        }
        let down = f.project(1);
        assert_eq!(down.kappa(), 1);
        assert_eq!(down.coeffs(), &f.coeffs()[..4]);
        let up = down.project(3);
        assert_eq!(up.coeffs()[..4], f.coeffs()[..4]);
        assert!(up.coeffs()[4..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn combine_requires_matching_truncation() {
        let a = SpectralField::zeros(2);
        let b = SpectralField::zeros(3);
        assert!(matches!(
            SpectralField::linear_combine(1.0, &a, 1.0, &b),
            Err(Error::TruncationMismatch { .. })
        ));
        assert!(ProductState::new(SpectralField::zeros(2), SpectralField::zeros(1)).is_err());
    }

    #[test]
    fn spectral_csv_format() {
        let f = SpectralField::basis(1, 1, 0).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "l,m,value");
        assert_eq!(lines.len(), 1 + 4);
        assert!(lines[3].starts_with("1,0,1.0000000000000000e0"));
    }

    fn arb_field(kappa: usize) -> impl Strategy<Value = SpectralField> {
        proptest::collection::vec(-10.0f64..10.0, coeff_count(kappa))
            .prop_map(move |c| SpectralField::from_coeffs(kappa, c).unwrap())
    }

    proptest! {
        #[test]
        fn norm_monotone_in_smoothness(u in arb_field(6), s1 in -2.0f64..2.0, ds in 0.0f64..2.0) {
            // (1 + l(l+1)) ≥ 1, so raising s can only increase the norm.
            prop_assert!(u.sobolev_norm(s1) <= u.sobolev_norm(s1 + ds) * (1.0 + 1e-12));
        }

        #[test]
        fn projection_is_idempotent_and_contractive(u in arb_field(6), k in 0usize..6) {
            let p = u.project(k);
            prop_assert_eq!(p.project(k), p.clone());
            prop_assert!(p.sobolev_norm(0.0) <= u.sobolev_norm(0.0) + 1e-12);
        }

        #[test]
        fn projection_tail_bound(u in arb_field(8), v in arb_field(8), k in 1usize..8) {
            // ‖X - P_κ X‖_0 ≤ κ^{-s} ‖X‖_s for s ∈ {1/2, 1}: the discarded
            // degrees all carry weight (1+l(l+1))^s ≥ κ^{2s}.
            let x = ProductState::new(u, v).unwrap();
            let px = x.project(k);
            let err = truncation_error_norm(&x, &px, 0.0).unwrap();
            for s in [0.5f64, 1.0] {
                let bound = (k as f64).powf(-s) * x.product_norm(s);
                prop_assert!(err <= bound * (1.0 + 1e-12),
                    "κ={k} s={s}: err {err} > bound {bound}");
            }
        }

        #[test]
        fn linear_combine_matches_pointwise(a in -3.0f64..3.0, b in -3.0f64..3.0,
                                            u in arb_field(4), w in arb_field(4)) {
            let c = SpectralField::linear_combine(a, &u, b, &w).unwrap();
            for (l, m) in modes(4) {
                let want = a * u.coeff(l, m) + b * w.coeff(l, m);
                prop_assert!((c.coeff(l, m) - want).abs() <= 1e-12);
            }
        }

        #[test]
        fn truncation_error_norm_matches_padded_difference(u in arb_field(7), v in arb_field(7), k in 0usize..7) {
            let x = ProductState::new(u, v).unwrap();
            let coarse = x.project(k);
            let direct = truncation_error_norm(&x, &coarse, 0.0).unwrap();
            let padded = ProductState::linear_combine(1.0, &x, -1.0, &coarse.project(x.kappa())).unwrap();
            prop_assert!((direct - padded.product_norm(0.0)).abs() <= 1e-12);
        }
    }
}
