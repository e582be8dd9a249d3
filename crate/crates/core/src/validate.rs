//! Fast self-check suite: basis orthonormality, transform round trip,
//! propagator group law, noise increment statistics, and trigonometric
//! operator-norm bounds. Used by the CLI `validate` command and as a
//! mutation-testing target (the fault hook corrupts the free propagator to
//! prove the group-law check has teeth).

use crate::fields::{coeff_count, SpectralField};
use crate::grid::{build_grid, GridField, QuadratureGrid};
use crate::noise::{sample_path, AngularPowerSpectrum};
use crate::propagator::{apply_trig, group_mode_matrix, ModeMatrix, TrigKind};

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantity and its threshold, for the report.
    pub detail: String,
}

/// Deliberate defects for exercising the failure paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaultInjection {
    #[default]
    None,
    /// Replaces the ℓ = 0 translation slot of the one-step propagator by
    /// `t + t²`. The matrix stays unimodular, so only the group-law check
    /// can catch it.
    GroupTranslationBug,
}

/// True when every check in the report passed.
pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

/// Runs the whole suite at truncation `kappa`. The fault hook, when set,
/// must flip exactly the group-law check.
pub fn run_checks(kappa: usize, fault: FaultInjection) -> Vec<CheckResult> {
    vec![
        check_orthonormality(kappa),
        check_round_trip(kappa),
        check_group_law(kappa, fault),
        check_noise_variance(kappa),
        check_trig_bounds(kappa),
    ]
}

/// Quadrature inner product of two grid fields.
fn grid_inner(grid: &QuadratureGrid, a: &GridField, b: &GridField) -> f64 {
    let phi_weight = 2.0 * std::f64::consts::PI / grid.n_phi() as f64;
    let mut acc = 0.0;
    for (i, &w) in grid.weights().iter().enumerate() {
        let mut row = 0.0;
        for k in 0..grid.n_phi() {
            row += a.values()[(i, k)] * b.values()[(i, k)];
        }
        acc += w * row;
    }
    acc * phi_weight
}

/// Every pair of basis functions integrates to the identity Gram matrix.
fn check_orthonormality(kappa: usize) -> CheckResult {
    const TOL: f64 = 1e-8;
    let grid = build_grid(kappa);
    let n = coeff_count(kappa);
    let synthesized: Vec<GridField> = (0..n)
        .map(|i| {
            let mut f = SpectralField::zeros(kappa);
            f.coeffs_mut()[i] = 1.0;
            grid.synthesize(&f).expect("basis synthesis cannot fail")
        })
        .collect();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((grid_inner(&grid, &synthesized[i], &synthesized[j]) - expected).abs());
        }
    }
    CheckResult {
        name: "basis-orthonormality",
        passed: worst <= TOL,
        detail: format!("max Gram deviation {worst:.3e} (tolerance {TOL:.1e})"),
    }
}

/// Synthesis followed by analysis recovers the coefficients.
fn check_round_trip(kappa: usize) -> CheckResult {
    const TOL: f64 = 1e-10;
    let grid = build_grid(kappa);
    let mut field = SpectralField::zeros(kappa);
    for (i, c) in field.coeffs_mut().iter_mut().enumerate() {
        *c = (i as f64 + 1.0).sin();
    }
    let back = grid
        .analyze(&grid.synthesize(&field).expect("synthesis"), kappa)
        .expect("analysis");
    let worst = field
        .coeffs()
        .iter()
        .zip(back.coeffs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    CheckResult {
        name: "transform-round-trip",
        passed: worst <= TOL,
        detail: format!("max coefficient error {worst:.3e} (tolerance {TOL:.1e})"),
    }
}

fn mode_matrix(l: usize, t: f64, fault: FaultInjection) -> ModeMatrix {
    if l == 0 && fault == FaultInjection::GroupTranslationBug {
        return ModeMatrix { a11: 1.0, a12: t + t * t, a21: 0.0, a22: 1.0 };
    }
    group_mode_matrix(l, t)
}

/// The free propagator composes additively in time and is unimodular.
fn check_group_law(kappa: usize, fault: FaultInjection) -> CheckResult {
    const TOL: f64 = 1e-12;
    let (s, t) = (0.35, 0.45);
    let mut worst = 0.0_f64;
    for l in 0..=kappa {
        let composed = mode_matrix(l, s, fault).matmul(&mode_matrix(l, t, fault));
        let direct = mode_matrix(l, s + t, fault);
        for (c, d) in [
            (composed.a11, direct.a11),
            (composed.a12, direct.a12),
            (composed.a21, direct.a21),
            (composed.a22, direct.a22),
        ] {
            worst = worst.max((c - d).abs());
        }
        worst = worst.max((mode_matrix(l, t, fault).det() - 1.0).abs());
    }
    CheckResult {
        name: "propagator-group-law",
        passed: worst <= TOL,
        detail: format!("max composition defect {worst:.3e} (tolerance {TOL:.1e})"),
    }
}

/// Sampled increments have the prescribed mean and variance per mode.
fn check_noise_variance(kappa: usize) -> CheckResult {
    const DRAWS: usize = 10_000;
    const SEED: u64 = 0x5eed;
    let h = 0.25;
    let spectrum = AngularPowerSpectrum::power_law(2.0, kappa).expect("positive exponent");
    // ℓ = 0 plus, when present, the three ℓ = 1 orders.
    let indices: Vec<usize> = (0..coeff_count(kappa).min(4)).collect();
    let mut sums = vec![0.0_f64; indices.len()];
    let mut sq_sums = vec![0.0_f64; indices.len()];
    for draw in 0..DRAWS {
        let path = sample_path(SEED, draw as u64, &spectrum, kappa, h, 1);
        let inc = path.increment(0);
        for (slot, &idx) in indices.iter().enumerate() {
            let z = inc.coeffs()[idx];
            sums[slot] += z;
            sq_sums[slot] += z * z;
        }
    }
    let m = DRAWS as f64;
    let mut worst_sigmas = 0.0_f64;
    for (slot, &idx) in indices.iter().enumerate() {
        let l = crate::fields::mode_of(idx).0;
        let target = spectrum.value(l) * h;
        let mean = sums[slot] / m;
        let var = sq_sums[slot] / m - mean * mean;
        // Standard errors of the mean and of the variance of a Gaussian.
        let se_mean = (target / m).sqrt();
        let se_var = target * (2.0 / m).sqrt();
        worst_sigmas = worst_sigmas.max(mean.abs() / se_mean);
        worst_sigmas = worst_sigmas.max((var - target).abs() / se_var);
    }
    CheckResult {
        name: "noise-variance",
        passed: worst_sigmas <= 5.0,
        detail: format!(
            "worst moment deviation {worst_sigmas:.2} standard errors over {} modes × {DRAWS} draws (limit 5)",
            indices.len()
        ),
    }
}

/// The trigonometric operators respect their Sobolev-norm bounds.
fn check_trig_bounds(kappa: usize) -> CheckResult {
    let mut field = SpectralField::zeros(kappa);
    for (i, c) in field.coeffs_mut().iter_mut().enumerate() {
        *c = (0.7 * i as f64 + 0.3).cos();
    }
    let slack = 1.0 + 1e-12;
    let mut worst_ratio = 0.0_f64;
    for &t in &[0.25, 0.7, 1.2] {
        let cos_part = apply_trig(TrigKind::Cosine, &field, t);
        let sine_part = apply_trig(TrigKind::ScaledSine, &field, t);
        let deriv_part = apply_trig(TrigKind::DerivSine, &field, t);
        let checks = [
            cos_part.sobolev_norm(0.0) / field.sobolev_norm(0.0),
            sine_part.sobolev_norm(0.0)
                / (t.max((1.5_f64).sqrt()) * field.sobolev_norm(-1.0)),
            deriv_part.sobolev_norm(-1.0) / field.sobolev_norm(0.0),
        ];
        for r in checks {
            worst_ratio = worst_ratio.max(r);
        }
        // Continuity at the origin: C(t) − I is Lipschitz in t against the
        // next-stronger norm.
        let mut dev = cos_part;
        dev.add_scaled(-1.0, &field).expect("same truncation");
        worst_ratio = worst_ratio.max(dev.sobolev_norm(0.0) / (2.0 * t * field.sobolev_norm(1.0)));
    }
    CheckResult {
        name: "trig-operator-bounds",
        passed: worst_ratio <= slack,
        detail: format!("worst bound ratio {worst_ratio:.6} (limit 1)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_healthy_code() {
        for kappa in [0, 3, 8] {
            let results = run_checks(kappa, FaultInjection::None);
            assert_eq!(results.len(), 5);
            for r in &results {
                assert!(r.passed, "κ={kappa}: {} failed: {}", r.name, r.detail);
                assert!(!r.detail.is_empty());
            }
            assert!(all_passed(&results));
        }
    }

    #[test]
    fn injected_propagator_bug_fails_exactly_the_group_law() {
        let results = run_checks(4, FaultInjection::GroupTranslationBug);
        assert!(!all_passed(&results));
        for r in &results {
            if r.name == "propagator-group-law" {
                assert!(!r.passed, "the fault must break the group law");
            } else {
                assert!(r.passed, "fault leaked into {}: {}", r.name, r.detail);
            }
        }
    }

    #[test]
    fn check_names_are_stable() {
        let names: Vec<&str> =
            run_checks(0, FaultInjection::None).iter().map(|r| r.name).collect();
        assert_eq!(
            names,
            vec![
                "basis-orthonormality",
                "transform-round-trip",
                "propagator-group-law",
                "noise-variance",
                "trig-operator-bounds"
            ]
        );
    }
}
