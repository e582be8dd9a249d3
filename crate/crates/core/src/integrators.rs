//! Time steppers and trajectory evolution.
//!
//! Two one-step methods advance the truncated first-order system
//! `X = (u, v)`:
//!
//! - **STM** (stochastic trigonometric method): perturb the velocity by the
//!   drift and noise terms, then push the result through the exact wave
//!   group, `X_n = E(h)·(X_{n-1} + (0, h·f̂ + ĝ ΔW))`. Because `E(h)`
//!   distributes over the sum, this factored form is algebraically identical
//!   to applying the group to each term separately but needs a single group
//!   application per step. On the linear problem the method is exact.
//! - **SI** (semi-implicit Euler–Maruyama): the same velocity perturbation
//!   followed by the per-mode resolvent `(I - hA)^{-1}`.
//!
//! Trajectories are deterministic functions of the initial state, the noise
//! path, the problem, and the stepper kind. Record times must be multiples
//! of the path's step size; no interpolation is performed.

use crate::fields::{index_of, ProductState, SpectralField};
use crate::model::ProblemSpec;
use crate::noise::NoisePath;
use crate::propagator::{apply_group, si_mode_matrix};
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Which one-step method advances the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepperKind {
    /// Stochastic trigonometric method (exact linear propagation).
    Stm,
    /// Semi-implicit Euler–Maruyama comparator.
    Si,
}

impl fmt::Display for StepperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepperKind::Stm => "stm",
            StepperKind::Si => "si",
        })
    }
}

impl FromStr for StepperKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stm" => Ok(StepperKind::Stm),
            "si" => Ok(StepperKind::Si),
            other => Err(Error::InvalidConfig(format!(
                "unknown stepper '{other}' (expected stm or si)"
            ))),
        }
    }
}

/// Velocity perturbation shared by both steppers:
/// `X + (0, h·f(u) + P_κ(g(u)·ΔW))`.
fn perturbed(x: &ProductState, h: f64, spec: &ProblemSpec, dw: &SpectralField) -> Result<ProductState> {
    let drift = spec.eval_f(&x.u)?;
    let noise = spec.apply_g_increment(&x.u, dw)?;
    let mut y = x.clone();
    y.v.add_scaled(h, &drift)?;
    y.v.add_scaled(1.0, &noise)?;
    Ok(y)
}

/// One step of the stochastic trigonometric method.
pub fn stm_step(
    x: &ProductState,
    h: f64,
    spec: &ProblemSpec,
    dw: &SpectralField,
) -> Result<ProductState> {
    Ok(apply_group(&perturbed(x, h, spec, dw)?, h))
}

/// One step of the semi-implicit Euler–Maruyama method.
pub fn si_step(
    x: &ProductState,
    h: f64,
    spec: &ProblemSpec,
    dw: &SpectralField,
) -> Result<ProductState> {
    let y = perturbed(x, h, spec, dw)?;
    let kappa = y.kappa();
    let mut out = ProductState::zeros(kappa);
    for l in 0..=kappa {
        let m = si_mode_matrix(l, h);
        for mm in -(l as i32)..=(l as i32) {
            let idx = index_of(l, mm);
            let (u, v) = m.apply(y.u.coeffs()[idx], y.v.coeffs()[idx]);
            out.u.coeffs_mut()[idx] = u;
            out.v.coeffs_mut()[idx] = v;
        }
    }
    Ok(out)
}

fn one_step(
    x: &ProductState,
    h: f64,
    spec: &ProblemSpec,
    dw: &SpectralField,
    kind: StepperKind,
) -> Result<ProductState> {
    match kind {
        StepperKind::Stm => stm_step(x, h, spec, dw),
        StepperKind::Si => si_step(x, h, spec, dw),
    }
}

fn check_alignment(x0: &ProductState, path: &NoisePath, spec: &ProblemSpec) -> Result<()> {
    if x0.kappa() != spec.kappa() {
        return Err(Error::TruncationMismatch { expected: spec.kappa(), actual: x0.kappa() });
    }
    if path.kappa() < spec.kappa() {
        return Err(Error::TruncationMismatch { expected: spec.kappa(), actual: path.kappa() });
    }
    Ok(())
}

/// Walks the full trajectory, invoking `observer(step, state)` at every grid
/// time `t_n = n·h` for `n = 0, …, N` (the initial state included), and
/// returns the final state.
///
/// This is the streaming interface used by the convergence studies: coupled
/// runs compare states step-by-step without materializing trajectories.
pub fn evolve_observed(
    x0: &ProductState,
    path: &NoisePath,
    spec: &ProblemSpec,
    kind: StepperKind,
    mut observer: impl FnMut(usize, &ProductState) -> Result<()>,
) -> Result<ProductState> {
    check_alignment(x0, path, spec)?;
    // Restricting the view first means increments are generated only for
    // the modes this solver retains (bit-identical to restricting later).
    let path = path.restrict_modes(spec.kappa());
    let h = path.h();
    let mut x = x0.clone();
    observer(0, &x)?;
    for n in 0..path.steps() {
        let dw = path.increment(n);
        x = one_step(&x, h, spec, &dw, kind)?;
        observer(n + 1, &x)?;
    }
    Ok(x)
}

/// Tolerance for matching a record time to a step index.
const RECORD_ALIGN_TOL: f64 = 1e-9;

/// Maps record times to step indices, rejecting misaligned or out-of-range
/// times.
fn record_steps(record_times: &[f64], h: f64, steps: usize) -> Result<Vec<usize>> {
    record_times
        .iter()
        .map(|&t| {
            let k = (t / h).round();
            if !(0.0..=(steps as f64)).contains(&k) || (t - k * h).abs() > RECORD_ALIGN_TOL {
                return Err(Error::MisalignedRecordTime { time: t, h });
            }
            Ok(k as usize)
        })
        .collect()
}

/// Evolves the system across the whole path and returns the states at the
/// requested times (which must be multiples of the path step size, up to
/// `T = N·h`). An empty request returns the final state only.
pub fn evolve(
    x0: &ProductState,
    path: &NoisePath,
    spec: &ProblemSpec,
    kind: StepperKind,
    record_times: &[f64],
) -> Result<Vec<ProductState>> {
    let steps = path.steps();
    let wanted = record_steps(record_times, path.h(), steps)?;
    let mut captured: Vec<Option<ProductState>> = vec![None; steps + 1];
    let final_state = evolve_observed(x0, path, spec, kind, |n, state| {
        if n == steps || wanted.contains(&n) {
            captured[n] = Some(state.clone());
        }
        Ok(())
    })?;
    debug_assert!(captured[steps].as_ref().is_some_and(|s| s.u.coeffs() == final_state.u.coeffs()));
    if wanted.is_empty() {
        return Ok(vec![captured[steps].take().expect("final state always captured")]);
    }
    Ok(wanted
        .iter()
        .map(|&k| captured[k].clone().expect("requested state captured during walk"))
        .collect())
}
