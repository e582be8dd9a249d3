//! Named experiment configurations at publication scale.
//!
//! Each preset bundles a problem definition with the convergence study it
//! was designed for (the `sample` preset is a plain simulation and carries
//! no study). These are the full-size runs — hundreds of samples against
//! reference resolutions of `κ = 2⁹` or `h = 2⁻¹²` — so expect them to be
//! expensive; the CLI's desk-scale defaults are the cheap starting point.

use crate::experiments::{StudyConfig, StudyKind};
use crate::integrators::StepperKind;
use crate::model::{Nonlinearity, ProblemBuilder};
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Identifier of a named configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    /// Single additive-noise simulation at `κ = 2⁷`, `h = 2⁻¹⁴`.
    Sample,
    /// Spatial convergence, additive noise: `κ ∈ {2¹..2⁷}` against `κ_ref = 2⁹`.
    Fig1,
    /// Temporal convergence, additive noise, against a semi-implicit
    /// reference at `h_ref = 2⁻¹²`, fixed `κ = 2⁹`.
    Fig4,
    /// Temporal pathwise convergence with rough noise (`δ = 1/4`), fixed `κ = 2⁹`.
    Fig5,
    /// Temporal convergence with a pointwise (non-spectral) drift, fixed `κ = 2⁷`.
    Fig6,
    /// Temporal convergence with multiplicative sine noise, fixed `κ = 2⁷`.
    Fig7,
    /// Temporal convergence with pointwise sine drift and rational noise map.
    Fig8,
}

impl PresetName {
    pub const ALL: [PresetName; 7] = [
        PresetName::Sample,
        PresetName::Fig1,
        PresetName::Fig4,
        PresetName::Fig5,
        PresetName::Fig6,
        PresetName::Fig7,
        PresetName::Fig8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetName::Sample => "sample",
            PresetName::Fig1 => "fig1",
            PresetName::Fig4 => "fig4",
            PresetName::Fig5 => "fig5",
            PresetName::Fig6 => "fig6",
            PresetName::Fig7 => "fig7",
            PresetName::Fig8 => "fig8",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown preset {s:?}; available: sample, fig1, fig4, fig5, fig6, fig7, fig8"
                ))
            })
    }
}

/// A preset resolved into concrete parameters.
#[derive(Debug, Clone)]
pub struct Recipe {
    pub problem: ProblemBuilder,
    /// Step size for a direct simulation of this configuration.
    pub sim_h: f64,
    /// The convergence study this configuration was designed for, if any.
    pub study: Option<StudyConfig>,
}

fn pow2(j: i32) -> f64 {
    2.0_f64.powi(j)
}

/// Tested step sizes `2^{-j}` for `j` in the given range.
fn dyadic_steps(js: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    js.map(|j| pow2(-j)).collect()
}

const PUBLICATION_SAMPLES: usize = 100;

fn study(kind: StudyKind, problem: &ProblemBuilder) -> StudyConfig {
    StudyConfig {
        kind,
        problem: problem.clone(),
        kappas: vec![],
        step_sizes: vec![],
        kappa_ref: problem.kappa,
        h_ref: 0.0,
        samples: PUBLICATION_SAMPLES,
        base_seed: 1,
        moment: 1,
        stepper: StepperKind::Stm,
        reference_stepper: None,
        workers: None,
    }
}

/// Resolves a preset name into its full configuration.
pub fn recipe(name: PresetName) -> Recipe {
    let additive = ProblemBuilder {
        kappa: 512,
        t_final: 1.0,
        f: Nonlinearity::CoefficientwiseSine,
        g: Nonlinearity::Identity,
        beta: 1.0,
        delta: 1.0,
        gamma: None,
        alpha: None,
    };
    match name {
        PresetName::Sample => {
            let problem = ProblemBuilder { kappa: 128, ..additive };
            Recipe { problem, sim_h: pow2(-14), study: None }
        }
        PresetName::Fig1 => {
            let problem = additive;
            let mut s = study(StudyKind::Space, &problem);
            s.kappas = vec![2, 4, 8, 16, 32, 64, 128];
            s.h_ref = pow2(-10);
            Recipe { problem, sim_h: pow2(-10), study: Some(s) }
        }
        PresetName::Fig4 => {
            let problem = additive;
            let mut s = study(StudyKind::Time, &problem);
            s.step_sizes = dyadic_steps(2..=7);
            s.h_ref = pow2(-12);
            s.reference_stepper = Some(StepperKind::Si);
            Recipe { problem, sim_h: pow2(-12), study: Some(s) }
        }
        PresetName::Fig5 => {
            let problem = ProblemBuilder { delta: 0.25, ..additive };
            let mut s = study(StudyKind::Time, &problem);
            s.step_sizes = dyadic_steps(2..=7);
            s.h_ref = pow2(-11);
            Recipe { problem, sim_h: pow2(-11), study: Some(s) }
        }
        PresetName::Fig6 => {
            let problem =
                ProblemBuilder { kappa: 128, f: Nonlinearity::PointwiseSine, ..additive };
            let mut s = study(StudyKind::Time, &problem);
            s.step_sizes = dyadic_steps(2..=6);
            s.h_ref = pow2(-8);
            Recipe { problem, sim_h: pow2(-8), study: Some(s) }
        }
        PresetName::Fig7 => {
            let problem =
                ProblemBuilder { kappa: 128, g: Nonlinearity::PointwiseSine, ..additive };
            let mut s = study(StudyKind::Time, &problem);
            s.step_sizes = dyadic_steps(2..=7);
            s.h_ref = pow2(-10);
            Recipe { problem, sim_h: pow2(-10), study: Some(s) }
        }
        PresetName::Fig8 => {
            let problem = ProblemBuilder {
                kappa: 128,
                f: Nonlinearity::PointwiseSine,
                g: Nonlinearity::PointwiseRational,
                ..additive
            };
            let mut s = study(StudyKind::Time, &problem);
            s.step_sizes = dyadic_steps(2..=7);
            s.h_ref = pow2(-11);
            Recipe { problem, sim_h: pow2(-11), study: Some(s) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_and_unknown_is_rejected() {
        for p in PresetName::ALL {
            assert_eq!(p.name().parse::<PresetName>().unwrap(), p);
            assert_eq!(p.to_string(), p.name());
        }
        assert!("fig2".parse::<PresetName>().is_err());
        assert!("".parse::<PresetName>().is_err());
    }

    #[test]
    fn every_recipe_is_structurally_valid() {
        for p in PresetName::ALL {
            let r = recipe(p);
            r.problem.build().unwrap_or_else(|e| panic!("{p}: bad problem: {e}"));
            assert!(r.sim_h > 0.0);
            if let Some(study) = &r.study {
                study.validate().unwrap_or_else(|e| panic!("{p}: bad study: {e}"));
                assert_eq!(study.samples, PUBLICATION_SAMPLES);
            }
        }
    }

    #[test]
    fn preset_parameters_match_the_published_scale() {
        let r = recipe(PresetName::Sample);
        assert!(r.study.is_none());
        assert_eq!(r.problem.kappa, 128);
        assert_eq!(r.sim_h, 2.0_f64.powi(-14));

        let s = recipe(PresetName::Fig1).study.unwrap();
        assert_eq!(s.kind, StudyKind::Space);
        assert_eq!(s.kappas, vec![2, 4, 8, 16, 32, 64, 128]);
        assert_eq!(s.kappa_ref, 512);
        assert_eq!(s.h_ref, 2.0_f64.powi(-10));
        assert_eq!(s.stepper, StepperKind::Stm);

        let s = recipe(PresetName::Fig4).study.unwrap();
        assert_eq!(s.kind, StudyKind::Time);
        assert_eq!(s.kappa_ref, 512);
        assert_eq!(s.h_ref, 2.0_f64.powi(-12));
        assert_eq!(s.reference_stepper, Some(StepperKind::Si));
        assert_eq!(s.step_sizes.len(), 6);

        let r = recipe(PresetName::Fig5);
        assert_eq!(r.problem.delta, 0.25);
        assert_eq!(r.study.as_ref().unwrap().h_ref, 2.0_f64.powi(-11));

        let r = recipe(PresetName::Fig6);
        assert_eq!(r.problem.f, Nonlinearity::PointwiseSine);
        assert_eq!(r.problem.g, Nonlinearity::Identity);
        assert_eq!(r.problem.kappa, 128);
        assert_eq!(r.study.as_ref().unwrap().h_ref, 2.0_f64.powi(-8));

        let r = recipe(PresetName::Fig7);
        assert_eq!(r.problem.f, Nonlinearity::CoefficientwiseSine);
        assert_eq!(r.problem.g, Nonlinearity::PointwiseSine);
        assert_eq!(r.study.as_ref().unwrap().h_ref, 2.0_f64.powi(-10));

        let r = recipe(PresetName::Fig8);
        assert_eq!(r.problem.f, Nonlinearity::PointwiseSine);
        assert_eq!(r.problem.g, Nonlinearity::PointwiseRational);
        assert_eq!(r.study.as_ref().unwrap().h_ref, 2.0_f64.powi(-11));
    }

    #[test]
    fn time_presets_test_step_sizes_coarser_than_the_reference() {
        for p in [PresetName::Fig4, PresetName::Fig5, PresetName::Fig6, PresetName::Fig7, PresetName::Fig8]
        {
            let s = recipe(p).study.unwrap();
            for &h in &s.step_sizes {
                let factor = h / s.h_ref;
                assert!(factor >= 2.0, "{p}: tested step {h} too close to reference");
                assert_eq!(factor.fract(), 0.0);
            }
        }
    }
}
