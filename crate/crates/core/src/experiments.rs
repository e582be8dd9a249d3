//! Monte Carlo convergence studies: coupled reference/coarse runs, strong
//! and pathwise error estimates, and log-log rate fitting.
//!
//! Both study kinds couple every coarse solver to the reference solver
//! through one shared noise realization per sample:
//!
//! - **space**: one path at the reference truncation; each coarse truncation
//!   sees the mode-restricted view of the same path and starts from the
//!   projected initial state. Errors are measured against the reference with
//!   the coarse state zero-padded, at every shared grid time.
//! - **time**: one path at the reference step size; each coarse step size
//!   consumes the time-coarsened view (sums of consecutive fine increments).
//!   Errors are measured at the coarse grid times.
//!
//! Runs proceed in lockstep — the reference trajectory streams through an
//! observer that advances all coarse solvers and folds their error metrics
//! on the fly — so no trajectory is ever stored, regardless of resolution.
//!
//! Per-sample error metrics are position (`L²` at `T`), velocity (`H⁻¹` at
//! `T`), and the maximum over grid times of the product norm; the latter is
//! both aggregated (the "state" error) and reported per sample (the
//! "pathwise" errors). Aggregation is `((1/M) Σ e_i^{2p})^{1/(2p)}` with the
//! sum taken in ascending sample order, so results are bit-identical for
//! any worker count. Standard errors come from the delta method.

use crate::fields::{field_error_norm, truncation_error_norm, ProductState};
use crate::integrators::{evolve_observed, si_step, stm_step, StepperKind};
use crate::model::{ProblemBuilder, ProblemSpec};
use crate::noise::{sample_path, NoisePath};
use crate::{fmt_f64, Error, Result};
use std::collections::VecDeque;
use std::io::Write;

/// Which resolution axis a study varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    /// Vary the truncation degree at fixed step size.
    Space,
    /// Vary the step size at fixed truncation.
    Time,
}

/// Full description of a convergence study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub problem: ProblemBuilder,
    /// Tested truncation degrees (space studies).
    pub kappas: Vec<usize>,
    /// Tested step sizes (time studies); each must be `h_ref·2^k`.
    pub step_sizes: Vec<f64>,
    /// Reference truncation (space) or the fixed truncation (time).
    pub kappa_ref: usize,
    /// Fixed step size (space) or the reference step size (time).
    pub h_ref: f64,
    /// Monte Carlo sample count `M`.
    pub samples: usize,
    pub base_seed: u64,
    /// Moment order `p`: errors are `L^{2p}(Ω)` estimates.
    pub moment: usize,
    pub stepper: StepperKind,
    /// Stepper for the reference run; defaults to `stepper`.
    pub reference_stepper: Option<StepperKind>,
    /// Worker threads: `None` uses the global pool, `Some(1)` is
    /// sequential, `Some(w)` uses a dedicated pool of `w` threads.
    pub workers: Option<usize>,
}

/// Aggregated errors at one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    /// `κ` for space studies, `1/h` for time studies, so log-log slopes are
    /// `-rate` on both axes.
    pub resolution: f64,
    /// `L^{2p}(Ω; L²)` position error at the final time.
    pub err_pos: f64,
    pub se_pos: f64,
    /// `L^{2p}(Ω; H⁻¹)` velocity error at the final time.
    pub err_vel: f64,
    pub se_vel: f64,
    /// `L^{2p}(Ω)` estimate of the maximal product-norm error over times.
    pub err_state: f64,
    pub se_state: f64,
    /// Per-sample maximal product-norm errors, ascending sample order.
    pub pathwise: Vec<f64>,
}

impl ErrorRecord {
    /// Largest per-sample pathwise error.
    pub fn err_path_max(&self) -> f64 {
        self.pathwise.iter().copied().fold(0.0, f64::max)
    }
}

/// Error metric selector for rate fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMetric {
    Position,
    Velocity,
    State,
    PathwiseMax,
}

impl ErrorMetric {
    pub fn name(self) -> &'static str {
        match self {
            ErrorMetric::Position => "position",
            ErrorMetric::Velocity => "velocity",
            ErrorMetric::State => "state",
            ErrorMetric::PathwiseMax => "pathwise-max",
        }
    }
}

/// Least-squares line through the log₂-log₂ error curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log₂ space.
    pub residual: f64,
}

/// Plain least squares on already-transformed points.
fn least_squares(points: &[(f64, f64)]) -> Result<RateEstimate> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints(points.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("rate fit needs distinct resolutions".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 =
        points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>();
    Ok(RateEstimate { slope, intercept, residual: (ss_res / n).sqrt() })
}

/// Fits `log₂(error) ~ slope·log₂(resolution) + intercept` for the chosen
/// metric, skipping records whose error is zero or not finite. At least
/// three usable records are required.
pub fn fit_rate(records: &[ErrorRecord], metric: ErrorMetric) -> Result<RateEstimate> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| {
            let err = match metric {
                ErrorMetric::Position => r.err_pos,
                ErrorMetric::Velocity => r.err_vel,
                ErrorMetric::State => r.err_state,
                ErrorMetric::PathwiseMax => r.err_path_max(),
            };
            (err > 0.0 && err.is_finite() && r.resolution > 0.0)
                .then(|| (r.resolution.log2(), err.log2()))
        })
        .collect();
    least_squares(&points)
}

/// `((1/M) Σ e_i^{2p})^{1/(2p)}` plus its delta-method standard error. The
/// sum runs in the order given (ascending samples), making the reduction
/// independent of how the samples were scheduled.
fn aggregate_moment(values: &[f64], p: usize) -> (f64, f64) {
    assert!(p >= 1, "moment order must be at least 1");
    let m = values.len() as f64;
    let two_p = (2 * p) as i32;
    let ys: Vec<f64> = values.iter().map(|e| e.powi(two_p)).collect();
    let mean = ys.iter().sum::<f64>() / m;
    if mean == 0.0 {
        return (0.0, 0.0);
    }
    let root = 1.0 / f64::from(two_p);
    let err = mean.powf(root);
    if values.len() < 2 {
        return (err, 0.0);
    }
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let se = root * mean.powf(root - 1.0) * (var / m).sqrt();
    (err, se)
}

/// Runs `job(0..samples)` with the configured worker count and returns the
/// results in ascending sample order.
#[cfg(feature = "parallel")]
pub fn run_samples<T, F>(samples: usize, workers: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    match workers {
        Some(0) => Err(Error::InvalidConfig("worker count must be at least 1".into())),
        Some(1) => (0..samples).map(job).collect(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("could not build worker pool: {e}")))?
            .install(|| (0..samples).into_par_iter().map(&job).collect()),
        None => (0..samples).into_par_iter().map(&job).collect(),
    }
}

/// Sequential fallback when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn run_samples<T, F>(samples: usize, workers: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if workers == Some(0) {
        return Err(Error::InvalidConfig("worker count must be at least 1".into()));
    }
    (0..samples).map(job).collect()
}

/// Per-sample error metrics of one coarse run against the reference.
#[derive(Debug, Clone, Copy)]
struct SampleMetrics {
    pos: f64,
    vel: f64,
    state_max: f64,
}

fn one_step(
    x: &ProductState,
    h: f64,
    spec: &ProblemSpec,
    dw: &crate::fields::SpectralField,
    kind: StepperKind,
) -> Result<ProductState> {
    match kind {
        StepperKind::Stm => stm_step(x, h, spec, dw),
        StepperKind::Si => si_step(x, h, spec, dw),
    }
}

/// Number of steps covering `[0, T]` with step `h`; `T` must be a multiple.
fn step_count(t_final: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!("step size must be positive, got {h}")));
    }
    let n = (t_final / h).round();
    if n < 1.0 || (t_final - n * h).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "final time {t_final} is not a positive multiple of step size {h}"
        )));
    }
    Ok(n as usize)
}

impl StudyConfig {
    fn validate_common(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidConfig("sample count must be at least 1".into()));
        }
        if self.moment == 0 {
            return Err(Error::InvalidConfig("moment order must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("worker count must be at least 1".into()));
        }
        if self.kappa_ref == 0 {
            return Err(Error::InvalidConfig("reference truncation must be at least 1".into()));
        }
        Ok(())
    }

    /// Coarsening factors `h/h_ref`, validated to be powers of two with the
    /// reference at least as fine as every tested step size.
    fn time_factors(&self, n_ref: usize) -> Result<Vec<usize>> {
        if self.step_sizes.is_empty() {
            return Err(Error::InvalidConfig("time study needs at least one step size".into()));
        }
        self.step_sizes
            .iter()
            .map(|&h| {
                let ratio = h / self.h_ref;
                let factor = ratio.round();
                if !(factor >= 1.0) || (ratio - factor).abs() > 1e-9 * factor {
                    return Err(Error::InvalidConfig(format!(
                        "step size {h} is not an integer multiple of the reference {}",
                        self.h_ref
                    )));
                }
                let factor = factor as usize;
                if !factor.is_power_of_two() {
                    return Err(Error::InvalidConfig(format!(
                        "step size {h} is not the reference step {} times a power of two",
                        self.h_ref
                    )));
                }
                if n_ref % factor != 0 {
                    return Err(Error::IndivisibleCoarsening { factor, steps: n_ref });
                }
                Ok(factor)
            })
            .collect()
    }

    fn validate_space(&self) -> Result<()> {
        self.validate_common()?;
        step_count(self.problem.t_final, self.h_ref)?;
        if self.kappas.is_empty() {
            return Err(Error::InvalidConfig("space study needs at least one truncation".into()));
        }
        for &k in &self.kappas {
            if k == 0 {
                return Err(Error::InvalidConfig("tested truncations must be at least 1".into()));
            }
            if k > self.kappa_ref {
                return Err(Error::InvalidConfig(format!(
                    "tested truncation {k} exceeds the reference truncation {}",
                    self.kappa_ref
                )));
            }
        }
        Ok(())
    }

    /// Structural validation without running the study: problem parameters,
    /// resolution lists, and time-grid alignment.
    pub fn validate(&self) -> Result<()> {
        self.problem.build()?;
        match self.kind {
            StudyKind::Space => self.validate_space(),
            StudyKind::Time => {
                self.validate_common()?;
                let n_ref = step_count(self.problem.t_final, self.h_ref)?;
                self.time_factors(n_ref).map(|_| ())
            }
        }
    }
}

/// Space study: errors against the reference truncation at every tested
/// degree, coupled through mode restriction of one noise path per sample.
pub fn run_space_study(cfg: &StudyConfig) -> Result<Vec<ErrorRecord>> {
    if cfg.kind != StudyKind::Space {
        return Err(Error::InvalidConfig("configuration is not a space study".into()));
    }
    cfg.validate_space()?;

    let prob_ref = cfg.problem.clone().build()?.with_kappa(cfg.kappa_ref)?;
    let n_steps = step_count(prob_ref.t_final(), cfg.h_ref)?;
    let coarse_specs: Vec<ProblemSpec> =
        cfg.kappas.iter().map(|&k| prob_ref.with_kappa(k)).collect::<Result<_>>()?;
    let spectrum = prob_ref.spectrum(cfg.kappa_ref);
    let stepper_ref = cfg.reference_stepper.unwrap_or(cfg.stepper);

    let per_sample: Vec<Vec<SampleMetrics>> =
        run_samples(cfg.samples, cfg.workers, |sample| {
            let path =
                sample_path(cfg.base_seed, sample as u64, &spectrum, cfg.kappa_ref, cfg.h_ref, n_steps);
            let x0_ref = prob_ref.initial_state();
            let mut coarse: Vec<(ProductState, NoisePath)> = coarse_specs
                .iter()
                .map(|spec| (x0_ref.project(spec.kappa()), path.restrict_modes(spec.kappa())))
                .collect();
            let mut metrics =
                vec![SampleMetrics { pos: 0.0, vel: 0.0, state_max: 0.0 }; coarse.len()];

            evolve_observed(&x0_ref, &path, &prob_ref, stepper_ref, |n, x_ref| {
                for (i, spec) in coarse_specs.iter().enumerate() {
                    if n > 0 {
                        let dw = coarse[i].1.increment(n - 1);
                        coarse[i].0 = one_step(&coarse[i].0, cfg.h_ref, spec, &dw, cfg.stepper)?;
                    }
                    let m = &mut metrics[i];
                    m.state_max = m.state_max.max(truncation_error_norm(x_ref, &coarse[i].0, 0.0)?);
                    if n == n_steps {
                        m.pos = field_error_norm(&x_ref.u, &coarse[i].0.u, 0.0)?;
                        m.vel = field_error_norm(&x_ref.v, &coarse[i].0.v, -1.0)?;
                    }
                }
                Ok(())
            })?;
            Ok(metrics)
        })?;

    Ok(reduce_records(
        &per_sample,
        &cfg.kappas.iter().map(|&k| k as f64).collect::<Vec<_>>(),
        cfg.moment,
    ))
}

/// Time study: errors against the reference step size at every tested step
/// size, coupled through time-coarsening of one noise path per sample.
pub fn run_time_study(cfg: &StudyConfig) -> Result<Vec<ErrorRecord>> {
    if cfg.kind != StudyKind::Time {
        return Err(Error::InvalidConfig("configuration is not a time study".into()));
    }
    cfg.validate_common()?;

    let prob = cfg.problem.clone().build()?.with_kappa(cfg.kappa_ref)?;
    let n_ref = step_count(prob.t_final(), cfg.h_ref)?;
    let factors = cfg.time_factors(n_ref)?;
    let spectrum = prob.spectrum(cfg.kappa_ref);
    let stepper_ref = cfg.reference_stepper.unwrap_or(cfg.stepper);

    let per_sample: Vec<Vec<SampleMetrics>> =
        run_samples(cfg.samples, cfg.workers, |sample| {
            let path =
                sample_path(cfg.base_seed, sample as u64, &spectrum, cfg.kappa_ref, cfg.h_ref, n_ref);
            let x0 = prob.initial_state();
            let mut coarse: Vec<(ProductState, NoisePath)> = factors
                .iter()
                .map(|&f| Ok((x0.clone(), path.coarsen_time(f)?)))
                .collect::<Result<_>>()?;
            let mut metrics =
                vec![SampleMetrics { pos: 0.0, vel: 0.0, state_max: 0.0 }; coarse.len()];

            evolve_observed(&x0, &path, &prob, stepper_ref, |n, x_ref| {
                for (i, &factor) in factors.iter().enumerate() {
                    if n % factor != 0 {
                        continue;
                    }
                    if n > 0 {
                        let h = cfg.h_ref * factor as f64;
                        let dw = coarse[i].1.increment(n / factor - 1);
                        coarse[i].0 = one_step(&coarse[i].0, h, &prob, &dw, cfg.stepper)?;
                    }
                    let m = &mut metrics[i];
                    m.state_max = m.state_max.max(truncation_error_norm(x_ref, &coarse[i].0, 0.0)?);
                    if n == n_ref {
                        m.pos = field_error_norm(&x_ref.u, &coarse[i].0.u, 0.0)?;
                        m.vel = field_error_norm(&x_ref.v, &coarse[i].0.v, -1.0)?;
                    }
                }
                Ok(())
            })?;
            Ok(metrics)
        })?;

    Ok(reduce_records(
        &per_sample,
        &cfg.step_sizes.iter().map(|&h| 1.0 / h).collect::<Vec<_>>(),
        cfg.moment,
    ))
}

/// Dispatches on the study kind.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<ErrorRecord>> {
    match cfg.kind {
        StudyKind::Space => run_space_study(cfg),
        StudyKind::Time => run_time_study(cfg),
    }
}

/// Folds per-sample metrics (outer index = sample, inner = resolution) into
/// one record per resolution, aggregating in ascending sample order.
fn reduce_records(
    per_sample: &[Vec<SampleMetrics>],
    resolutions: &[f64],
    moment: usize,
) -> Vec<ErrorRecord> {
    resolutions
        .iter()
        .enumerate()
        .map(|(i, &resolution)| {
            let pos: Vec<f64> = per_sample.iter().map(|s| s[i].pos).collect();
            let vel: Vec<f64> = per_sample.iter().map(|s| s[i].vel).collect();
            let state: Vec<f64> = per_sample.iter().map(|s| s[i].state_max).collect();
            let (err_pos, se_pos) = aggregate_moment(&pos, moment);
            let (err_vel, se_vel) = aggregate_moment(&vel, moment);
            let (err_state, se_state) = aggregate_moment(&state, moment);
            ErrorRecord {
                resolution,
                err_pos,
                se_pos,
                err_vel,
                se_vel,
                err_state,
                se_state,
                pathwise: state,
            }
        })
        .collect()
}

/// Configuration of the empirical temporal-regularity probe.
#[derive(Debug, Clone)]
pub struct RegularityConfig {
    pub problem: ProblemBuilder,
    pub kappa: usize,
    pub h_ref: f64,
    /// Probed lags `τ`; each must be a multiple of `h_ref`.
    pub taus: Vec<f64>,
    pub samples: usize,
    pub base_seed: u64,
    pub stepper: StepperKind,
    pub workers: Option<usize>,
}

/// Mean-square displacement at one lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityPoint {
    pub tau: f64,
    /// Estimate of `E‖u(t+τ) − u(t)‖²_{L²}`, averaged over grid times `t`.
    pub mean_sq_diff: f64,
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct RegularityResult {
    pub points: Vec<RegularityPoint>,
    /// Slope of `log₂ E‖u(t+τ)−u(t)‖²` against `log₂ τ`; the Hölder
    /// exponent estimate is `slope / 2`.
    pub rate: RateEstimate,
}

/// Estimates the temporal Hölder regularity of the position component by
/// regressing the mean-square displacement against the lag.
pub fn empirical_time_regularity(cfg: &RegularityConfig) -> Result<RegularityResult> {
    if cfg.samples == 0 {
        return Err(Error::InvalidConfig("sample count must be at least 1".into()));
    }
    if cfg.workers == Some(0) {
        return Err(Error::InvalidConfig("worker count must be at least 1".into()));
    }
    let prob = cfg.problem.clone().build()?.with_kappa(cfg.kappa)?;
    let n_steps = step_count(prob.t_final(), cfg.h_ref)?;
    let lags: Vec<usize> = cfg
        .taus
        .iter()
        .map(|&tau| {
            let ratio = tau / cfg.h_ref;
            let lag = ratio.round();
            if !(lag >= 1.0) || (ratio - lag).abs() > 1e-9 * lag || lag as usize >= n_steps {
                return Err(Error::InvalidConfig(format!(
                    "lag {tau} must be a multiple of the step size {} inside (0, T)",
                    cfg.h_ref
                )));
            }
            Ok(lag as usize)
        })
        .collect::<Result<_>>()?;
    if lags.len() < 3 {
        return Err(Error::InsufficientPoints(lags.len()));
    }
    let max_lag = *lags.iter().max().expect("at least three lags");
    let spectrum = prob.spectrum(cfg.kappa);

    // Per sample: one trajectory; a sliding window of position fields covers
    // all requested lags simultaneously.
    let per_sample: Vec<Vec<f64>> = run_samples(cfg.samples, cfg.workers, |sample| {
        let path = sample_path(cfg.base_seed, sample as u64, &spectrum, cfg.kappa, cfg.h_ref, n_steps);
        let x0 = prob.initial_state();
        let mut window: VecDeque<crate::fields::SpectralField> =
            VecDeque::with_capacity(max_lag + 1);
        let mut sums = vec![0.0f64; lags.len()];
        let mut counts = vec![0usize; lags.len()];
        evolve_observed(&x0, &path, &prob, cfg.stepper, |n, x| {
            window.push_back(x.u.clone());
            if window.len() > max_lag + 1 {
                window.pop_front();
            }
            for (i, &lag) in lags.iter().enumerate() {
                if n >= lag {
                    let earlier = &window[window.len() - 1 - lag];
                    sums[i] += field_error_norm(&x.u, earlier, 0.0)?.powi(2);
                    counts[i] += 1;
                }
            }
            Ok(())
        })?;
        Ok(sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect())
    })?;

    let points: Vec<RegularityPoint> = lags
        .iter()
        .enumerate()
        .map(|(i, &lag)| {
            let values: Vec<f64> = per_sample.iter().map(|s| s[i]).collect();
            let m = values.len() as f64;
            let mean = values.iter().sum::<f64>() / m;
            let se = if values.len() < 2 {
                0.0
            } else {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
            };
            RegularityPoint { tau: lag as f64 * cfg.h_ref, mean_sq_diff: mean, se }
        })
        .collect();

    let fit_points: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.mean_sq_diff > 0.0 && p.mean_sq_diff.is_finite())
        .map(|p| (p.tau.log2(), p.mean_sq_diff.log2()))
        .collect();
    let rate = least_squares(&fit_points)?;
    Ok(RegularityResult { points, rate })
}

/// Writes the aggregated error table:
/// `resolution,err_pos,se_pos,err_vel,se_vel,err_state,se_state,err_path_max`.
pub fn write_errors_csv<W: Write>(records: &[ErrorRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "resolution,err_pos,se_pos,err_vel,se_vel,err_state,se_state,err_path_max")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.resolution),
            fmt_f64(r.err_pos),
            fmt_f64(r.se_pos),
            fmt_f64(r.err_vel),
            fmt_f64(r.se_vel),
            fmt_f64(r.err_state),
            fmt_f64(r.se_state),
            fmt_f64(r.err_path_max())
        )?;
    }
    Ok(())
}

/// Writes the per-sample pathwise errors: `resolution,sample,err_path`.
pub fn write_pathwise_csv<W: Write>(records: &[ErrorRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "resolution,sample,err_path")?;
    for r in records {
        for (sample, err) in r.pathwise.iter().enumerate() {
            writeln!(w, "{},{sample},{}", fmt_f64(r.resolution), fmt_f64(*err))?;
        }
    }
    Ok(())
}

/// Writes fitted rates: `metric,slope,intercept,residual`.
pub fn write_rates_csv<W: Write>(
    rates: &[(&str, RateEstimate)],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "metric,slope,intercept,residual")?;
    for (name, r) in rates {
        writeln!(
            w,
            "{name},{},{},{}",
            fmt_f64(r.slope),
            fmt_f64(r.intercept),
            fmt_f64(r.residual)
        )?;
    }
    Ok(())
}

/// Writes regularity points: `tau,mean_sq_diff,se`.
pub fn write_regularity_csv<W: Write>(
    points: &[RegularityPoint],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "tau,mean_sq_diff,se")?;
    for p in points {
        writeln!(w, "{},{},{}", fmt_f64(p.tau), fmt_f64(p.mean_sq_diff), fmt_f64(p.se))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Nonlinearity;
    use crate::propagator::laplace_eigenvalue;
    use approx::assert_abs_diff_eq;

    fn record_with(resolution: f64, err: f64) -> ErrorRecord {
        ErrorRecord {
            resolution,
            err_pos: err,
            se_pos: 0.0,
            err_vel: err,
            se_vel: 0.0,
            err_state: err,
            se_state: 0.0,
            pathwise: vec![err],
        }
    }

    #[test]
    fn fit_rate_recovers_exact_power_laws() {
        // Errors ∝ κ⁻¹ against resolution = κ.
        let records: Vec<ErrorRecord> =
            [2.0, 4.0, 8.0, 16.0].iter().map(|&k| record_with(k, 1.0 / k)).collect();
        let rate = fit_rate(&records, ErrorMetric::Position).unwrap();
        assert_abs_diff_eq!(rate.slope, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rate.residual, 0.0, epsilon = 1e-12);

        // Errors ∝ h^{1/2} against resolution = h itself gives slope +1/2.
        let records: Vec<ErrorRecord> = (2..=6)
            .map(|j| {
                let h = 2.0_f64.powi(-j);
                record_with(h, h.sqrt())
            })
            .collect();
        let rate = fit_rate(&records, ErrorMetric::State).unwrap();
        assert_abs_diff_eq!(rate.slope, 0.5, epsilon = 1e-12);

        // Constant errors give slope 0.
        let records: Vec<ErrorRecord> =
            [2.0, 4.0, 8.0].iter().map(|&k| record_with(k, 0.125)).collect();
        let rate = fit_rate(&records, ErrorMetric::PathwiseMax).unwrap();
        assert_abs_diff_eq!(rate.slope, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rate_excludes_degenerate_points() {
        let mut records: Vec<ErrorRecord> =
            [2.0, 4.0, 8.0, 16.0].iter().map(|&k| record_with(k, 1.0 / k)).collect();
        records.push(record_with(32.0, 0.0)); // excluded, not a failure
        let rate = fit_rate(&records, ErrorMetric::Position).unwrap();
        assert_abs_diff_eq!(rate.slope, -1.0, epsilon = 1e-12);

        let too_few: Vec<ErrorRecord> =
            [2.0, 4.0].iter().map(|&k| record_with(k, 1.0 / k)).collect();
        assert!(matches!(
            fit_rate(&too_few, ErrorMetric::Position),
            Err(Error::InsufficientPoints(2))
        ));
    }

    #[test]
    fn aggregation_matches_hand_computation() {
        // p = 1 on {1, 3}: mean of squares 5, err √5; se via delta method.
        let (err, se) = aggregate_moment(&[1.0, 3.0], 1);
        assert_abs_diff_eq!(err, 5.0_f64.sqrt(), epsilon = 1e-15);
        let var_y = ((1.0 - 5.0f64).powi(2) + (9.0 - 5.0f64).powi(2)) / 1.0;
        let expected_se = 0.5 / 5.0_f64.sqrt() * (var_y / 2.0).sqrt();
        assert_abs_diff_eq!(se, expected_se, epsilon = 1e-15);

        // p = 2 uses fourth moments.
        let (err, _) = aggregate_moment(&[1.0, 3.0], 2);
        assert_abs_diff_eq!(err, ((1.0 + 81.0) / 2.0_f64).powf(0.25), epsilon = 1e-15);

        let (err, se) = aggregate_moment(&[0.0, 0.0], 1);
        assert_eq!((err, se), (0.0, 0.0));
    }

    #[test]
    fn run_samples_preserves_order_and_propagates_errors() {
        let out = run_samples(8, Some(2), |i| Ok(i * 10)).unwrap();
        assert_eq!(out, vec![0, 10, 20, 30, 40, 50, 60, 70]);

        let fail: Result<Vec<usize>> =
            run_samples(4, None, |i| if i == 2 { Err(Error::InsufficientPoints(0)) } else { Ok(i) });
        assert!(fail.is_err());
        assert!(run_samples(2, Some(0), |i| Ok(i)).is_err());
    }

    fn base_study(kind: StudyKind) -> StudyConfig {
        StudyConfig {
            kind,
            problem: ProblemBuilder {
                kappa: 8,
                t_final: 1.0,
                f: Nonlinearity::Zero,
                g: Nonlinearity::Identity,
                beta: 1.0,
                delta: 1.0,
                gamma: None,
                alpha: None,
            },
            kappas: vec![],
            step_sizes: vec![],
            kappa_ref: 8,
            h_ref: 1.0 / 16.0,
            samples: 3,
            base_seed: 77,
            moment: 1,
            stepper: StepperKind::Stm,
            reference_stepper: None,
            workers: Some(1),
        }
    }

    #[test]
    fn space_study_linear_case_matches_tail_oracle() {
        // f = g = 0: modes evolve independently and exactly, so the coarse
        // run equals the projected reference and every error is exactly the
        // reference's discarded-mode content, computable in closed form from
        // the initial data and the per-mode rotation.
        let mut cfg = base_study(StudyKind::Space);
        cfg.problem.g = Nonlinearity::Zero;
        cfg.kappas = vec![2, 4];
        cfg.samples = 2;
        let records = run_space_study(&cfg).unwrap();

        let gamma = cfg.problem.beta + 0.5 + 1e-6;
        let t_final = 1.0;
        for (record, &kappa) in records.iter().zip(&cfg.kappas) {
            // Tail position content at T over modes κ < ℓ ≤ κ_ref.
            let mut pos_sq = 0.0;
            let mut vel_sq = 0.0;
            for l in (kappa + 1)..=cfg.kappa_ref {
                let lambda = laplace_eigenvalue(l);
                let omega = lambda.sqrt();
                let u0 = (l as f64).powf(-gamma);
                let v0 = (l as f64).powf(-(gamma - 1.0));
                let u_t = (omega * t_final).cos() * u0 + (omega * t_final).sin() / omega * v0;
                let v_t = -omega * (omega * t_final).sin() * u0 + (omega * t_final).cos() * v0;
                pos_sq += u_t * u_t;
                vel_sq += v_t * v_t / (1.0 + lambda);
            }
            assert_abs_diff_eq!(record.err_pos, pos_sq.sqrt(), epsilon = 1e-12);
            assert_abs_diff_eq!(record.err_vel, vel_sq.sqrt(), epsilon = 1e-12);
            // Deterministic problem: zero spread across samples.
            assert_eq!(record.se_pos, 0.0);
            assert!(record.err_state >= record.err_pos - 1e-15);
        }
    }

    #[test]
    fn space_study_at_reference_resolution_is_exact_zero() {
        let mut cfg = base_study(StudyKind::Space);
        cfg.kappas = vec![8];
        let records = run_space_study(&cfg).unwrap();
        assert_eq!(records[0].err_pos, 0.0);
        assert_eq!(records[0].err_vel, 0.0);
        assert_eq!(records[0].err_state, 0.0);
        assert!(records[0].pathwise.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn space_study_errors_decrease_with_truncation() {
        let mut cfg = base_study(StudyKind::Space);
        cfg.kappas = vec![1, 2, 4, 6];
        let records = run_space_study(&cfg).unwrap();
        for pair in records.windows(2) {
            assert!(
                pair[1].err_pos <= pair[0].err_pos + 1e-15,
                "position error must not grow with κ: {} -> {}",
                pair[0].err_pos,
                pair[1].err_pos
            );
            assert!(pair[1].err_state <= pair[0].err_state + 1e-15);
        }
        // Strong error never exceeds the worst pathwise error.
        for r in &records {
            assert!(r.err_state <= r.err_path_max() * (1.0 + 1e-12));
            assert_eq!(r.pathwise.len(), cfg.samples);
        }
    }

    #[test]
    fn time_study_exact_for_linear_deterministic_stm() {
        let mut cfg = base_study(StudyKind::Time);
        cfg.problem.g = Nonlinearity::Zero;
        cfg.h_ref = 1.0 / 64.0;
        cfg.step_sizes = vec![1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0];
        cfg.samples = 1;
        let stm = run_time_study(&cfg).unwrap();
        for r in &stm {
            assert!(
                r.err_state <= 1e-12,
                "exact propagation should give zero error, got {}",
                r.err_state
            );
        }

        cfg.stepper = StepperKind::Si;
        let si = run_time_study(&cfg).unwrap();
        for r in &si {
            assert!(
                r.err_state > 1e-4,
                "the semi-implicit stepper must show a real discretization error, got {}",
                r.err_state
            );
        }
    }

    #[test]
    fn time_study_at_reference_step_is_exact_zero() {
        let mut cfg = base_study(StudyKind::Time);
        cfg.h_ref = 1.0 / 16.0;
        cfg.step_sizes = vec![1.0 / 16.0];
        cfg.samples = 2;
        let records = run_time_study(&cfg).unwrap();
        assert_eq!(records[0].err_state, 0.0);
        assert_eq!(records[0].err_pos, 0.0);
    }

    #[test]
    fn study_validation_rejects_bad_configurations() {
        let mut cfg = base_study(StudyKind::Space);
        assert!(run_space_study(&cfg).is_err()); // no tested truncations
        cfg.kappas = vec![16];
        assert!(run_space_study(&cfg).is_err()); // coarser than tested
        cfg.kappas = vec![4];
        cfg.samples = 0;
        assert!(run_space_study(&cfg).is_err());

        let mut cfg = base_study(StudyKind::Time);
        cfg.step_sizes = vec![1.0 / 24.0]; // not a power-of-two multiple
        assert!(run_time_study(&cfg).is_err());
        cfg.step_sizes = vec![1.0 / 32.0]; // finer than the reference
        assert!(run_time_study(&cfg).is_err());
        cfg.step_sizes = vec![1.0 / 4.0];
        cfg.h_ref = 0.3; // T not a multiple
        assert!(run_time_study(&cfg).is_err());

        let cfg_wrong_kind = base_study(StudyKind::Space);
        assert!(run_time_study(&cfg_wrong_kind).is_err());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = base_study(StudyKind::Space);
        cfg.kappas = vec![2, 4];
        cfg.samples = 6;
        cfg.workers = Some(1);
        let sequential = run_space_study(&cfg).unwrap();
        cfg.workers = Some(4);
        let parallel = run_space_study(&cfg).unwrap();
        assert_eq!(sequential, parallel, "results must be bit-identical across worker counts");
    }

    #[test]
    fn regularity_of_smooth_deterministic_path_is_quadratic() {
        // f = g = 0 with smooth data: u is continuously differentiable in
        // time, so E‖u(t+τ)−u(t)‖² ~ τ².
        let cfg = RegularityConfig {
            problem: ProblemBuilder {
                kappa: 8,
                t_final: 1.0,
                f: Nonlinearity::Zero,
                g: Nonlinearity::Zero,
                beta: 3.0,
                delta: 1.0,
                gamma: Some(4.0),
                alpha: None,
            },
            kappa: 8,
            h_ref: 1.0 / 256.0,
            taus: vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0],
            samples: 1,
            base_seed: 5,
            stepper: StepperKind::Stm,
            workers: Some(1),
        };
        let result = empirical_time_regularity(&cfg).unwrap();
        assert!(
            (result.rate.slope - 2.0).abs() <= 0.3,
            "smooth path should have quadratic displacement, slope {}",
            result.rate.slope
        );
        assert_eq!(result.points.len(), 3);
        assert!(result.points[0].mean_sq_diff < result.points[2].mean_sq_diff);
    }

    #[test]
    fn regularity_requires_three_lags() {
        let mut cfg = RegularityConfig {
            problem: ProblemBuilder::default(),
            kappa: 4,
            h_ref: 1.0 / 64.0,
            taus: vec![1.0 / 8.0],
            samples: 1,
            base_seed: 5,
            stepper: StepperKind::Stm,
            workers: Some(1),
        };
        cfg.problem.kappa = 4;
        assert!(matches!(
            empirical_time_regularity(&cfg),
            Err(Error::InsufficientPoints(1))
        ));
        cfg.taus = vec![0.3, 0.4, 0.5]; // misaligned lags
        assert!(empirical_time_regularity(&cfg).is_err());
    }

    #[test]
    fn csv_formats_are_pinned() {
        let records = vec![record_with(4.0, 0.5)];
        let mut buf = Vec::new();
        write_errors_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text
            .starts_with("resolution,err_pos,se_pos,err_vel,se_vel,err_state,se_state,err_path_max\n"));
        assert!(text.contains("5.0000000000000000e-1"));

        let mut buf = Vec::new();
        write_pathwise_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("resolution,sample,err_path\n"));
        assert!(text.lines().nth(1).unwrap().contains(",0,"));

        let mut buf = Vec::new();
        write_rates_csv(
            &[("position", RateEstimate { slope: -1.0, intercept: 0.25, residual: 0.0 })],
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("metric,slope,intercept,residual\n"));
        assert!(text.contains("position,-1.0000000000000000e0"));

        let mut buf = Vec::new();
        write_regularity_csv(
            &[RegularityPoint { tau: 0.125, mean_sq_diff: 1e-3, se: 1e-5 }],
            &mut buf,
        )
        .unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("tau,mean_sq_diff,se\n"));
    }
}
