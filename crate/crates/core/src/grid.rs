//! Quadrature grids and the spectral ↔ point-value transforms.
//!
//! A grid for design degree `κ_g` uses Gauss–Legendre nodes in `x = cos θ`
//! (so the colatitude integral of a polynomial integrand is exact) and
//! equispaced longitudes. Sizing follows the pseudospectral product rule: a
//! pointwise product of two degree-`κ_g` fields analysed against a
//! degree-`κ_g` basis function has colatitude degree ≤ `3κ_g` and longitude
//! modes ≤ `3κ_g`, so
//!
//! - colatitude nodes: `n_θ = ⌈(3κ_g + 2)/2⌉` (Gauss exactness `2n_θ - 1 ≥ 3κ_g + 1`),
//! - longitudes: `n_φ = 3κ_g + 1` (trapezoid exactness up to mode `3κ_g`).
//!
//! Quadrature nodes and weights are produced by Newton iteration on the
//! Legendre polynomial `P_{n}` to near machine precision. The grid caches the
//! normalized Legendre table and the longitude cosine/sine tables, is
//! immutable after construction, and can be shared read-only across threads.

use crate::fields::{index_of, SpectralField};
use crate::harmonics::normalized_legendre_column;
use crate::{fmt_f64, Error, Result};
use ndarray::Array2;
use std::f64::consts::PI;
use std::io::Write;

/// Convergence threshold for the Newton iteration on Legendre roots.
const NEWTON_TOL: f64 = 1e-14;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Gauss–Legendre rule with `n` nodes on `[-1, 1]`, exact for polynomials of
/// degree `≤ 2n - 1`. Nodes are returned strictly decreasing, weights sum
/// to 2.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi-style initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= NEWTON_TOL * x.abs().max(1.0) {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                x -= p / d;
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `(P_n(x), P'_n(x))` by the standard three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Point values of a field on the quadrature grid, row-major over
/// (colatitude node, longitude).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    design_degree: usize,
    values: Array2<f64>,
}

impl GridField {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn design_degree(&self) -> usize {
        self.design_degree
    }

    /// Applies a scalar map pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField { design_degree: self.design_degree, values: self.values.mapv(&f) }
    }

    /// Pointwise product with another field on the same grid.
    pub fn pointwise_mul(&self, other: &GridField) -> Result<GridField> {
        if self.values.dim() != other.values.dim() {
            return Err(Error::InvalidConfig(format!(
                "grid value shapes differ: {:?} vs {:?}",
                self.values.dim(),
                other.values.dim()
            )));
        }
        Ok(GridField { design_degree: self.design_degree, values: &self.values * &other.values })
    }
}

/// Gauss–Legendre × uniform-longitude quadrature grid with cached basis
/// tables.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    design_degree: usize,
    /// Gauss–Legendre nodes `x_j = cos θ_j`, strictly decreasing.
    x: Vec<f64>,
    /// Colatitudes `θ_j = acos(x_j)`, strictly increasing.
    theta: Vec<f64>,
    /// Colatitude weights (sum 2).
    w: Vec<f64>,
    n_phi: usize,
    /// Normalized Legendre values per node, packed as
    /// `table[j * stride + pack(m, l)]` with `pack(m, l) = offset(m) + l - m`.
    legendre: Vec<f64>,
    stride: usize,
    /// `cos(m φ_k)` and `sin(m φ_k)`, laid out `[m * n_phi + k]`.
    cos_mphi: Vec<f64>,
    sin_mphi: Vec<f64>,
}

/// Builds the quadrature grid for design degree `κ_g`.
pub fn build_grid(design_degree: usize) -> QuadratureGrid {
    let n_theta = (3 * design_degree + 2).div_ceil(2).max(1);
    let n_phi = (3 * design_degree + 1).max(1);
    let (x, w) = gauss_legendre_rule(n_theta);
    let theta: Vec<f64> = x.iter().map(|&xi| xi.acos()).collect();

    let stride = (design_degree + 1) * (design_degree + 2) / 2;
    let mut legendre = Vec::with_capacity(n_theta * stride);
    for &t in &theta {
        for m in 0..=design_degree {
            legendre.extend(normalized_legendre_column(design_degree, m, t));
        }
    }

    let mut cos_mphi = Vec::with_capacity((design_degree + 1) * n_phi);
    let mut sin_mphi = Vec::with_capacity((design_degree + 1) * n_phi);
    for m in 0..=design_degree {
        for k in 0..n_phi {
            let arg = m as f64 * 2.0 * PI * k as f64 / n_phi as f64;
            cos_mphi.push(arg.cos());
            sin_mphi.push(arg.sin());
        }
    }

    QuadratureGrid { design_degree, x, theta, w, n_phi, legendre, stride, cos_mphi, sin_mphi }
}

impl QuadratureGrid {
    pub fn design_degree(&self) -> usize {
        self.design_degree
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn nodes_x(&self) -> &[f64] {
        &self.x
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn phi(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_phi as f64
    }

    /// Offset of the packed column for order `m` inside one node's Legendre
    /// slice.
    #[inline]
    fn pack_offset(&self, m: usize) -> usize {
        m * (self.design_degree + 1) - m * (m.saturating_sub(1)) / 2
    }

    /// Evaluates a spectral field on the grid:
    /// `f(θ_j, φ_k) = Σ_l c_{l,0} L_{l,0}(θ_j)
    ///  + Σ_{m≥1} √2 L_{l,m}(θ_j) (c_{l,m} cos mφ_k + c_{l,-m} sin mφ_k)`.
    pub fn synthesize(&self, field: &SpectralField) -> Result<GridField> {
        let kappa = field.kappa();
        if kappa > self.design_degree {
            return Err(Error::TruncationExceedsGrid { kappa, design: self.design_degree });
        }
        let coeffs = field.coeffs();
        let n_theta = self.n_theta();
        let mut values = Array2::zeros((n_theta, self.n_phi));

        // Per node: collapse the degree sums into per-order amplitudes, then
        // accumulate the longitude series.
        let mut amp_cos = vec![0.0f64; kappa + 1];
        let mut amp_sin = vec![0.0f64; kappa + 1];
        for j in 0..n_theta {
            let node_table = &self.legendre[j * self.stride..(j + 1) * self.stride];
            for m in 0..=kappa {
                let col = &node_table[self.pack_offset(m)..];
                let mut ac = 0.0;
                let mut asn = 0.0;
                for l in m..=kappa {
                    let lm = col[l - m];
                    if m == 0 {
                        ac += coeffs[index_of(l, 0)] * lm;
                    } else {
                        ac += coeffs[index_of(l, m as i32)] * lm;
                        asn += coeffs[index_of(l, -(m as i32))] * lm;
                    }
                }
                if m == 0 {
                    amp_cos[0] = ac;
                    amp_sin[0] = 0.0;
                } else {
                    amp_cos[m] = SQRT_2 * ac;
                    amp_sin[m] = SQRT_2 * asn;
                }
            }
            let mut row = values.row_mut(j);
            for k in 0..self.n_phi {
                let mut val = amp_cos[0];
                for m in 1..=kappa {
                    val += amp_cos[m] * self.cos_mphi[m * self.n_phi + k]
                        + amp_sin[m] * self.sin_mphi[m * self.n_phi + k];
                }
                row[k] = val;
            }
        }
        Ok(GridField { design_degree: self.design_degree, values })
    }

    /// Quadrature inner products against the real basis up to degree `κ`:
    /// `c_{l,m} = Σ_j w_j (2π / n_φ) Σ_k f(θ_j, φ_k) · Y^real_{l,m}(θ_j, φ_k)`.
    ///
    /// Exact to round-off whenever the integrand
    /// `f · Y` is a spherical polynomial the grid resolves, in particular for
    /// pointwise products of synthesized fields within the design degree.
    pub fn analyze(&self, grid_field: &GridField, kappa: usize) -> Result<SpectralField> {
        if kappa > self.design_degree {
            return Err(Error::TruncationExceedsGrid { kappa, design: self.design_degree });
        }
        let n_theta = self.n_theta();
        if grid_field.values.dim() != (n_theta, self.n_phi) {
            return Err(Error::InvalidConfig(format!(
                "grid field shape {:?} does not match grid ({n_theta}, {})",
                grid_field.values.dim(),
                self.n_phi
            )));
        }

        let phi_weight = 2.0 * PI / self.n_phi as f64;
        let mut out = SpectralField::zeros(kappa);
        let coeffs = out.coeffs_mut();
        // Longitude reduction per node and order, then the weighted
        // colatitude sum against the Legendre table.
        let mut fc = vec![0.0f64; kappa + 1];
        let mut fs = vec![0.0f64; kappa + 1];
        for j in 0..n_theta {
            let row = grid_field.values.row(j);
            for m in 0..=kappa {
                let mut sc = 0.0;
                let mut ss = 0.0;
                for k in 0..self.n_phi {
                    sc += row[k] * self.cos_mphi[m * self.n_phi + k];
                    ss += row[k] * self.sin_mphi[m * self.n_phi + k];
                }
                fc[m] = sc * phi_weight;
                fs[m] = ss * phi_weight;
            }
            let wj = self.w[j];
            let node_table = &self.legendre[j * self.stride..(j + 1) * self.stride];
            for m in 0..=kappa {
                let col = &node_table[self.pack_offset(m)..];
                if m == 0 {
                    for l in 0..=kappa {
                        coeffs[index_of(l, 0)] += wj * col[l] * fc[0];
                    }
                } else {
                    for l in m..=kappa {
                        let basis = wj * SQRT_2 * col[l - m];
                        coeffs[index_of(l, m as i32)] += basis * fc[m];
                        coeffs[index_of(l, -(m as i32))] += basis * fs[m];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Writes point values as CSV with header `theta,phi,value`, row-major
    /// over (node, longitude), 17 significant digits.
    pub fn write_grid_csv<W: Write>(&self, field: &GridField, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta,phi,value")?;
        for j in 0..self.n_theta() {
            for k in 0..self.n_phi {
                writeln!(
                    w,
                    "{},{},{}",
                    fmt_f64(self.theta[j]),
                    fmt_f64(self.phi(k)),
                    fmt_f64(field.values[(j, k)])
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{coeff_count, modes};
    use crate::harmonics::{sph_harm_real, HarmonicIndex, SphericalPoint};
    use approx::assert_abs_diff_eq;

    /// Tolerance for frozen quadrature constants.
    const RULE_TOL: f64 = 1e-14;
    /// Round-trip / Parseval tolerance.
    const TRANSFORM_TOL: f64 = 1e-10;

    #[test]
    fn rule_matches_tabulated_low_orders() {
        // n = 1: midpoint of [-1,1].
        let (x, w) = gauss_legendre_rule(1);
        assert_abs_diff_eq!(x[0], 0.0, epsilon = RULE_TOL);
        assert_abs_diff_eq!(w[0], 2.0, epsilon = RULE_TOL);

        // n = 2: nodes ±1/√3, weights 1.
        let (x, w) = gauss_legendre_rule(2);
        assert_abs_diff_eq!(x[0], 1.0 / 3.0_f64.sqrt(), epsilon = RULE_TOL);
        assert_abs_diff_eq!(x[1], -1.0 / 3.0_f64.sqrt(), epsilon = RULE_TOL);
        assert_abs_diff_eq!(w[0], 1.0, epsilon = RULE_TOL);
        assert_abs_diff_eq!(w[1], 1.0, epsilon = RULE_TOL);

        // n = 3: {±√(3/5), 0}, weights {5/9, 8/9}.
        let (x, w) = gauss_legendre_rule(3);
        assert_abs_diff_eq!(x[0], (3.0_f64 / 5.0).sqrt(), epsilon = RULE_TOL);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = RULE_TOL);
        assert_abs_diff_eq!(w[0], 5.0 / 9.0, epsilon = RULE_TOL);
        assert_abs_diff_eq!(w[1], 8.0 / 9.0, epsilon = RULE_TOL);

        // n = 5 against standard tables.
        let (x, w) = gauss_legendre_rule(5);
        assert_abs_diff_eq!(x[0], 0.906_179_845_938_664, epsilon = RULE_TOL);
        assert_abs_diff_eq!(x[1], 0.538_469_310_105_683_1, epsilon = RULE_TOL);
        assert_abs_diff_eq!(x[2], 0.0, epsilon = RULE_TOL);
        assert_abs_diff_eq!(w[0], 0.236_926_885_056_189_1, epsilon = RULE_TOL);
        assert_abs_diff_eq!(w[1], 0.478_628_670_499_366_5, epsilon = RULE_TOL);
        assert_abs_diff_eq!(w[2], 0.568_888_888_888_888_9, epsilon = RULE_TOL);
    }

    #[test]
    fn rule_weights_sum_to_two_and_nodes_ordered() {
        for n in [1usize, 2, 7, 31, 64, 193] {
            let (x, w) = gauss_legendre_rule(n);
            let sum: f64 = w.iter().sum();
            assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-13);
            assert!(w.iter().all(|&wi| wi > 0.0));
            assert!(x.windows(2).all(|p| p[0] > p[1]), "nodes not strictly decreasing (n={n})");
            assert!(x.iter().all(|&xi| xi.abs() < 1.0));
        }
    }

    #[test]
    fn grid_sizes_follow_product_rule() {
        let g0 = build_grid(0);
        assert_eq!(g0.n_theta(), 1);
        assert_eq!(g0.n_phi(), 1);
        assert_abs_diff_eq!(g0.nodes_x()[0], 0.0, epsilon = RULE_TOL);
        assert_abs_diff_eq!(g0.weights()[0], 2.0, epsilon = RULE_TOL);

        let g1 = build_grid(1);
        assert_eq!(g1.n_theta(), 3);
        assert_eq!(g1.n_phi(), 4);

        let g4 = build_grid(4);
        assert_eq!(g4.n_theta(), 7);
        assert_eq!(g4.n_phi(), 13);
    }

    fn deterministic_field(kappa: usize, seed: u64) -> SpectralField {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let coeffs: Vec<f64> = (0..coeff_count(kappa)).map(|_| next()).collect();
        SpectralField::from_coeffs(kappa, coeffs).unwrap()
    }

    #[test]
    fn synthesis_matches_direct_basis_sum() {
        let grid = build_grid(3);
        let field = deterministic_field(3, 0x1111);
        let synth = grid.synthesize(&field).unwrap();
        for (j, &theta) in grid.thetas().iter().enumerate() {
            for k in 0..grid.n_phi() {
                let p = SphericalPoint::new(theta, grid.phi(k)).unwrap();
                let direct: f64 = modes(3)
                    .map(|(l, m)| {
                        field.coeff(l, m) * sph_harm_real(HarmonicIndex::new(l, m).unwrap(), p)
                    })
                    .sum();
                assert_abs_diff_eq!(synth.values()[(j, k)], direct, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for kappa in [0usize, 1, 2, 8, 32] {
            let grid = build_grid(kappa);
            let field = deterministic_field(kappa, 0x2222 + kappa as u64);
            let synth = grid.synthesize(&field).unwrap();
            let back = grid.analyze(&synth, kappa).unwrap();
            for (a, b) in back.coeffs().iter().zip(field.coeffs()) {
                assert!((a - b).abs() <= TRANSFORM_TOL, "round trip drift {a} vs {b} (κ={kappa})");
            }

            // Parseval: the quadrature of f² equals the coefficient energy.
            let phi_weight = 2.0 * PI / grid.n_phi() as f64;
            let mut quad = 0.0;
            for j in 0..grid.n_theta() {
                for k in 0..grid.n_phi() {
                    quad += grid.weights()[j] * phi_weight * synth.values()[(j, k)].powi(2);
                }
            }
            let energy: f64 = field.coeffs().iter().map(|c| c * c).sum();
            assert!(
                (quad - energy).abs() <= TRANSFORM_TOL * energy.max(1.0),
                "Parseval drift: quad {quad} vs energy {energy} (κ={kappa})"
            );
        }
    }

    #[test]
    fn orthonormality_on_thousand_point_grid() {
        // Grid for design degree 20 has 31 × 61 = 1891 points; inner products
        // of basis functions up to degree 6 must reproduce the identity.
        let grid = build_grid(20);
        let fields: Vec<SpectralField> = modes(6)
            .map(|(l, m)| SpectralField::basis(6, l, m).unwrap())
            .collect();
        let synths: Vec<GridField> = fields.iter().map(|f| grid.synthesize(f).unwrap()).collect();
        let phi_weight = 2.0 * PI / grid.n_phi() as f64;
        for (a, fa) in synths.iter().enumerate() {
            for (b, fb) in synths.iter().enumerate().skip(a) {
                let mut ip = 0.0;
                for j in 0..grid.n_theta() {
                    for k in 0..grid.n_phi() {
                        ip += grid.weights()[j] * phi_weight * fa.values()[(j, k)] * fb.values()[(j, k)];
                    }
                }
                let want = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (ip - want).abs() <= 1e-8,
                    "⟨{a},{b}⟩ = {ip}, want {want}"
                );
            }
        }
    }

    #[test]
    fn analyze_of_pointwise_product_matches_fine_grid_oracle() {
        // Products of band-limited fields are analysed exactly; a grid at
        // twice the design degree serves as the independent oracle.
        for kappa in [1usize, 2, 4] {
            let grid = build_grid(kappa);
            let fine = build_grid(2 * kappa);
            let u = deterministic_field(kappa, 0x3333 + kappa as u64);
            let w = deterministic_field(kappa, 0x4444 + kappa as u64);

            let prod = grid.synthesize(&u).unwrap().pointwise_mul(&grid.synthesize(&w).unwrap()).unwrap();
            let got = grid.analyze(&prod, kappa).unwrap();

            let prod_fine =
                fine.synthesize(&u.project(2 * kappa)).unwrap().pointwise_mul(&fine.synthesize(&w.project(2 * kappa)).unwrap()).unwrap();
            let oracle = fine.analyze(&prod_fine, kappa).unwrap();

            for ((a, b), (l, m)) in got.coeffs().iter().zip(oracle.coeffs()).zip(modes(kappa)) {
                assert!(
                    (a - b).abs() <= 1e-8,
                    "product coefficient ({l},{m}): {a} vs oracle {b} (κ={kappa})"
                );
            }
        }
    }

    #[test]
    fn transform_rejects_unresolvable_degrees() {
        let grid = build_grid(2);
        let field = SpectralField::zeros(5);
        assert!(matches!(
            grid.synthesize(&field),
            Err(Error::TruncationExceedsGrid { .. })
        ));
        let ok = grid.synthesize(&SpectralField::zeros(2)).unwrap();
        assert!(matches!(
            grid.analyze(&ok, 3),
            Err(Error::TruncationExceedsGrid { .. })
        ));
    }

    #[test]
    fn grid_csv_format() {
        let grid = build_grid(0);
        let field = grid.synthesize(&SpectralField::zeros(0)).unwrap();
        let mut buf = Vec::new();
        grid.write_grid_csv(&field, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "theta,phi,value");
        let row = lines.next().unwrap();
        let cols: Vec<_> = row.split(',').collect();
        assert_eq!(cols.len(), 3);
        assert!(cols[2].contains('e'), "values use scientific notation: {row}");
    }
}
