//! Command-line driver: parses layered configuration (defaults < preset <
//! config file < flags), dispatches simulations, convergence studies, the
//! regularity probe, and the self-check suite, and writes CSV outputs with
//! a reproducibility manifest.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{join_f64, join_usize, Draft};
use sphere_swave::experiments::{
    empirical_time_regularity, fit_rate, run_study, write_errors_csv, write_pathwise_csv,
    write_rates_csv, write_regularity_csv, ErrorMetric, RateEstimate, RegularityConfig,
    StudyConfig, StudyKind,
};
use sphere_swave::fields::SpectralField;
use sphere_swave::integrators::{evolve, StepperKind};
use sphere_swave::model::{Nonlinearity, ProblemBuilder, ProblemSpec};
use sphere_swave::noise::sample_path;
use sphere_swave::presets::{recipe, PresetName, Recipe};
use sphere_swave::validate::{all_passed, run_checks, FaultInjection};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sphere-swave",
    version,
    about = "Spectral solver and Monte Carlo convergence harness for the semilinear \
             stochastic wave equation on the unit sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write the position field at selected times.
    Simulate(CommonOpts),
    /// Spatial convergence study: vary the truncation degree against a
    /// finer reference truncation at a fixed step size.
    ConvergeSpace(CommonOpts),
    /// Temporal convergence study: vary the step size against a finer
    /// reference step at a fixed truncation degree.
    ConvergeTime(ConvergeTimeOpts),
    /// Estimate the temporal Hölder regularity of the position component.
    Regularity(CommonOpts),
    /// Run the fast self-check suite and report pass/fail per check.
    Validate(ValidateOpts),
}

/// Flags shared by the run commands. Numeric flags accept `b^e` power
/// notation (for example `--h-ref 2^-12`).
#[derive(Args, Debug, Clone)]
struct CommonOpts {
    /// Named configuration: sample, fig1, fig4, fig5, fig6, fig7, or fig8.
    #[arg(long)]
    preset: Option<String>,
    /// Flat key=value file applied over the preset; flags override both.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Truncation degree (comma list of tested degrees for converge-space).
    #[arg(long)]
    kappa: Option<String>,
    /// Reference truncation degree (converge-space).
    #[arg(long = "kappa-ref")]
    kappa_ref: Option<usize>,
    /// Step size (comma list of tested step sizes for converge-time).
    #[arg(long)]
    h: Option<String>,
    /// Reference step size (converge-time, regularity).
    #[arg(long = "h-ref")]
    h_ref: Option<String>,
    /// Final time of the simulation interval [0, T].
    #[arg(long = "T")]
    t_final: Option<String>,
    /// Initial-data smoothness exponent β.
    #[arg(long)]
    beta: Option<String>,
    /// Noise smoothness exponent δ.
    #[arg(long)]
    delta: Option<String>,
    /// Noise spectrum decay exponent α (default 2δ + 1e-6; must exceed 2δ).
    #[arg(long)]
    alpha: Option<String>,
    /// Initial-data decay exponent γ (default β + 1/2 + 1e-6).
    #[arg(long)]
    gamma: Option<String>,
    /// Drift nonlinearity: zero, coefficientwise-sine, pointwise-sine, or
    /// pointwise-rational.
    #[arg(long)]
    f: Option<String>,
    /// Noise map: identity, zero, coefficientwise-sine, pointwise-sine, or
    /// pointwise-rational.
    #[arg(long)]
    g: Option<String>,
    /// Time stepper: stm (trigonometric) or si (semi-implicit).
    #[arg(long)]
    stepper: Option<String>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Base seed of the counter-based noise generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores; 1 gives a fully serial run).
    #[arg(long)]
    workers: Option<usize>,
    /// Moment order p: errors are L^{2p}(Ω) estimates.
    #[arg(long)]
    moment: Option<usize>,
    /// Lags τ for the regularity probe (comma list).
    #[arg(long)]
    tau: Option<String>,
    /// Extra record times for simulate (comma list).
    #[arg(long)]
    record: Option<String>,
    /// Output directory (falls back to the SPHERE_SWAVE_OUT variable).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ConvergeTimeOpts {
    #[command(flatten)]
    common: CommonOpts,
    /// Stepper for the reference run (default: same as --stepper).
    #[arg(long = "reference-stepper")]
    reference_stepper: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct ValidateOpts {
    /// Truncation degree the checks run at.
    #[arg(long, default_value_t = 8)]
    kappa: usize,
    /// Deliberately corrupt the free propagator (testing hook).
    #[arg(long = "inject-fault", hide = true)]
    inject_fault: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(opts) => cmd_simulate(opts),
        Command::ConvergeSpace(opts) => cmd_converge(opts, StudyKind::Space, None),
        Command::ConvergeTime(opts) => {
            cmd_converge(&opts.common, StudyKind::Time, opts.reference_stepper.as_deref())
        }
        Command::Regularity(opts) => cmd_regularity(opts),
        Command::Validate(opts) => cmd_validate(opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

/// Which command the preset is being resolved for; decides how its study
/// parameters map onto configuration keys.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Simulate,
    Space,
    Time,
    Regularity,
}

/// Builds the layered configuration: preset (from the flag, or a `preset=`
/// line in the file), then the file, then flags.
fn resolve_draft(opts: &CommonOpts, mode: Mode) -> Result<Draft, String> {
    let mut file_draft = Draft::new();
    if let Some(path) = &opts.config {
        file_draft.apply_file(path)?;
    }
    let preset_name =
        opts.preset.clone().or_else(|| file_draft.get("preset").map(str::to_string));

    let mut draft = Draft::new();
    if let Some(name) = preset_name {
        let preset: PresetName = name.parse().map_err(|e: sphere_swave::Error| e.to_string())?;
        apply_preset(&mut draft, preset, mode);
        draft.set("preset", &name);
    }
    if let Some(path) = &opts.config {
        draft.apply_file(path)?;
    }
    apply_flags(&mut draft, opts);
    Ok(draft)
}

fn apply_preset(draft: &mut Draft, preset: PresetName, mode: Mode) {
    let Recipe { problem, sim_h, study } = recipe(preset);
    draft.set("T", problem.t_final);
    draft.set("beta", problem.beta);
    draft.set("delta", problem.delta);
    draft.set("f", problem.f);
    draft.set("g", problem.g);
    draft.set_opt("gamma", problem.gamma);
    draft.set_opt("alpha", problem.alpha);
    match mode {
        Mode::Simulate => {
            draft.set("kappa", problem.kappa);
            draft.set("h", sim_h);
        }
        Mode::Space => {
            if let Some(s) = &study {
                draft.set("samples", s.samples);
                draft.set("seed", s.base_seed);
                draft.set("moment", s.moment);
                draft.set("stepper", s.stepper);
                draft.set("kappa-ref", s.kappa_ref);
                draft.set("h", s.h_ref);
                if s.kind == StudyKind::Space {
                    draft.set("kappa", join_usize(&s.kappas));
                }
            } else {
                draft.set("kappa-ref", problem.kappa);
                draft.set("h", sim_h);
            }
        }
        Mode::Time => {
            if let Some(s) = &study {
                draft.set("samples", s.samples);
                draft.set("seed", s.base_seed);
                draft.set("moment", s.moment);
                draft.set("stepper", s.stepper);
                draft.set("kappa", s.kappa_ref);
                draft.set("h-ref", s.h_ref);
                if s.kind == StudyKind::Time {
                    draft.set("h", join_f64(&s.step_sizes));
                    draft.set_opt("reference-stepper", s.reference_stepper);
                }
            } else {
                draft.set("kappa", problem.kappa);
                draft.set("h-ref", sim_h);
            }
        }
        Mode::Regularity => {
            if let Some(s) = &study {
                draft.set("samples", s.samples);
                draft.set("seed", s.base_seed);
                draft.set("stepper", s.stepper);
                draft.set("kappa", s.kappa_ref);
                draft.set("h-ref", s.h_ref);
            } else {
                draft.set("kappa", problem.kappa);
                draft.set("h-ref", sim_h);
            }
        }
    }
}

fn apply_flags(draft: &mut Draft, opts: &CommonOpts) {
    draft.set_opt("kappa", opts.kappa.as_ref());
    draft.set_opt("kappa-ref", opts.kappa_ref);
    draft.set_opt("h", opts.h.as_ref());
    draft.set_opt("h-ref", opts.h_ref.as_ref());
    draft.set_opt("T", opts.t_final.as_ref());
    draft.set_opt("beta", opts.beta.as_ref());
    draft.set_opt("delta", opts.delta.as_ref());
    draft.set_opt("alpha", opts.alpha.as_ref());
    draft.set_opt("gamma", opts.gamma.as_ref());
    draft.set_opt("f", opts.f.as_ref());
    draft.set_opt("g", opts.g.as_ref());
    draft.set_opt("stepper", opts.stepper.as_ref());
    draft.set_opt("samples", opts.samples);
    draft.set_opt("seed", opts.seed);
    draft.set_opt("workers", opts.workers);
    draft.set_opt("moment", opts.moment);
    draft.set_opt("tau", opts.tau.as_ref());
    draft.set_opt("record", opts.record.as_ref());
    draft.set_opt("out", opts.out.as_ref().map(|p| p.display().to_string()));
}

fn resolve_out(draft: &Draft) -> Result<PathBuf, String> {
    if let Some(out) = draft.get("out") {
        return Ok(PathBuf::from(out));
    }
    if let Some(out) = std::env::var_os("SPHERE_SWAVE_OUT") {
        return Ok(PathBuf::from(out));
    }
    Err("no output directory: pass --out, set out= in the config file, or set SPHERE_SWAVE_OUT"
        .into())
}

/// Assembles the problem description from the draft. `T` has no default:
/// it must come from a preset, the config file, or the flag.
fn build_problem(draft: &Draft, kappa: usize) -> Result<ProblemBuilder, String> {
    let t_final = draft
        .get_f64("T")?
        .ok_or("T: required final time (set --T, or choose a preset)")?;
    build_problem_with_t(draft, kappa, t_final)
}

fn insert(manifest: &mut BTreeMap<String, String>, key: &str, value: impl Display) {
    manifest.insert(key.to_string(), value.to_string());
}

/// Resolved problem parameters, recorded with their effective values so the
/// manifest reproduces the run even when defaults were used.
fn problem_manifest(manifest: &mut BTreeMap<String, String>, spec: &ProblemSpec) {
    insert(manifest, "T", spec.t_final());
    insert(manifest, "beta", spec.beta());
    insert(manifest, "delta", spec.delta());
    insert(manifest, "gamma", spec.gamma());
    insert(manifest, "alpha", spec.alpha());
    insert(manifest, "f", spec.f());
    insert(manifest, "g", spec.g());
}

fn base_manifest(command: &str, draft: &Draft, out: &Path) -> BTreeMap<String, String> {
    let mut manifest = BTreeMap::new();
    insert(&mut manifest, "command", command);
    insert(&mut manifest, "version", env!("CARGO_PKG_VERSION"));
    insert(&mut manifest, "out", out.display());
    if let Some(preset) = draft.get("preset") {
        insert(&mut manifest, "preset", preset);
    }
    manifest
}

fn create_out_dir(out: &Path) -> Result<(), String> {
    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))
}

/// Number of steps covering `[0, T]`; `T` must be a positive multiple of `h`.
fn step_count(t_final: f64, h: f64) -> Result<usize, String> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(format!("h: step size must be positive, got {h}"));
    }
    let n = (t_final / h).round();
    if n < 1.0 || (t_final - n * h).abs() > 1e-9 {
        return Err(format!("T: {t_final} is not a positive multiple of the step size {h}"));
    }
    Ok(n as usize)
}

fn write_file<F>(path: &Path, write: F) -> Result<(), String>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    let file =
        fs::File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    let mut writer = BufWriter::new(file);
    write(&mut writer).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Synthesizes the field on the problem's quadrature grid and writes the
/// `theta,phi,value` table.
fn write_surface(spec: &ProblemSpec, field: &SpectralField, path: &Path) -> Result<(), String> {
    let grid = spec.grid();
    let surface = grid.synthesize(field).map_err(|e| e.to_string())?;
    write_file(path, |w| grid.write_grid_csv(&surface, w))
}

fn cmd_simulate(opts: &CommonOpts) -> Result<(), String> {
    let draft = resolve_draft(opts, Mode::Simulate)?;
    let out = resolve_out(&draft)?;
    let kappa = draft.get_usize("kappa")?.unwrap_or(128);
    let seed = draft.get_u64("seed")?.unwrap_or(1);
    let stepper: StepperKind = draft.get_parsed("stepper")?.unwrap_or(StepperKind::Stm);
    let t_final = draft
        .get_f64("T")?
        .ok_or("T: required final time (set --T, or choose a preset)")?;
    create_out_dir(&out)?;
    let mut manifest = base_manifest("simulate", &draft, &out);
    insert(&mut manifest, "kappa", kappa);
    insert(&mut manifest, "seed", seed);
    insert(&mut manifest, "stepper", stepper);

    if t_final == 0.0 {
        // Degenerate interval: only the initial field exists. Build the
        // problem with a placeholder horizon that is never stepped.
        let spec = build_problem_with_t(&draft, kappa, 1.0)?.build().map_err(|e| e.to_string())?;
        write_surface(&spec, &spec.initial_state().u, &out.join("u_initial.csv"))?;
        problem_manifest(&mut manifest, &spec);
        insert(&mut manifest, "T", 0.0);
        config::write_manifest(&out.join("manifest.txt"), &manifest)?;
        println!("wrote u_initial.csv (T = 0: no evolution)");
        return Ok(());
    }

    let h = draft.get_f64("h")?.ok_or("h: required step size for simulate")?;
    let record: Vec<f64> = draft.get_f64_list("record")?.unwrap_or_default();
    let spec = build_problem(&draft, kappa)?.build().map_err(|e| e.to_string())?;
    let steps = step_count(t_final, h)?;
    let path = sample_path(seed, 0, &spec.spectrum(kappa), kappa, h, steps);
    let x0 = spec.initial_state();

    let mut wanted = record.clone();
    wanted.push(t_final);
    let states = evolve(&x0, &path, &spec, stepper, &wanted).map_err(|e| e.to_string())?;

    write_surface(&spec, &x0.u, &out.join("u_initial.csv"))?;
    for (i, state) in states.iter().take(record.len()).enumerate() {
        write_surface(&spec, &state.u, &out.join(format!("u_t_{i}.csv")))?;
    }
    write_surface(&spec, &states.last().expect("final state").u, &out.join("u_final.csv"))?;

    problem_manifest(&mut manifest, &spec);
    insert(&mut manifest, "h", h);
    if !record.is_empty() {
        insert(&mut manifest, "record", join_f64(&record));
    }
    config::write_manifest(&out.join("manifest.txt"), &manifest)?;
    println!(
        "wrote u_initial.csv, {}u_final.csv for κ = {kappa}, h = {h}, T = {t_final}",
        if record.is_empty() {
            String::new()
        } else {
            format!("{} intermediate fields, ", record.len())
        }
    );
    Ok(())
}

/// `build_problem` with an explicit horizon, for the `T = 0` special case.
fn build_problem_with_t(draft: &Draft, kappa: usize, t_final: f64) -> Result<ProblemBuilder, String> {
    Ok(ProblemBuilder {
        kappa,
        t_final,
        f: draft.get_parsed("f")?.unwrap_or(Nonlinearity::CoefficientwiseSine),
        g: draft.get_parsed("g")?.unwrap_or(Nonlinearity::Identity),
        beta: draft.get_f64("beta")?.unwrap_or(1.0),
        delta: draft.get_f64("delta")?.unwrap_or(1.0),
        gamma: draft.get_f64("gamma")?,
        alpha: draft.get_f64("alpha")?,
    })
}

fn cmd_converge(
    opts: &CommonOpts,
    kind: StudyKind,
    reference_stepper_flag: Option<&str>,
) -> Result<(), String> {
    let mode = if kind == StudyKind::Space { Mode::Space } else { Mode::Time };
    let mut draft = resolve_draft(opts, mode)?;
    draft.set_opt("reference-stepper", reference_stepper_flag);
    let out = resolve_out(&draft)?;

    let samples = draft.get_usize("samples")?.unwrap_or(20);
    let seed = draft.get_u64("seed")?.unwrap_or(1);
    let moment = draft.get_usize("moment")?.unwrap_or(1);
    let stepper: StepperKind = draft.get_parsed("stepper")?.unwrap_or(StepperKind::Stm);
    let workers = draft.get_usize("workers")?;

    let (cfg, command_name) = match kind {
        StudyKind::Space => {
            let kappas = draft
                .get_usize_list("kappa")?
                .ok_or("kappa: required comma list of tested truncation degrees")?;
            let kappa_ref = draft.get_usize("kappa-ref")?.unwrap_or(128);
            let h = draft.get_f64("h")?.unwrap_or_else(|| 2.0_f64.powi(-10));
            let problem = build_problem(&draft, kappa_ref)?;
            (
                StudyConfig {
                    kind,
                    problem,
                    kappas,
                    step_sizes: vec![],
                    kappa_ref,
                    h_ref: h,
                    samples,
                    base_seed: seed,
                    moment,
                    stepper,
                    reference_stepper: None,
                    workers,
                },
                "converge-space",
            )
        }
        StudyKind::Time => {
            let step_sizes = draft
                .get_f64_list("h")?
                .ok_or("h: required comma list of tested step sizes")?;
            let h_ref = draft.get_f64("h-ref")?.unwrap_or_else(|| 2.0_f64.powi(-10));
            let kappa = draft.get_usize("kappa")?.unwrap_or(128);
            let reference_stepper: Option<StepperKind> =
                draft.get_parsed("reference-stepper")?;
            let problem = build_problem(&draft, kappa)?;
            (
                StudyConfig {
                    kind,
                    problem,
                    kappas: vec![],
                    step_sizes,
                    kappa_ref: kappa,
                    h_ref,
                    samples,
                    base_seed: seed,
                    moment,
                    stepper,
                    reference_stepper,
                    workers,
                },
                "converge-time",
            )
        }
    };
    cfg.validate().map_err(|e| e.to_string())?;
    create_out_dir(&out)?;

    let records = run_study(&cfg).map_err(|e| e.to_string())?;
    write_file(&out.join("errors.csv"), |w| write_errors_csv(&records, w))?;
    write_file(&out.join("pathwise.csv"), |w| write_pathwise_csv(&records, w))?;

    let mut rates: Vec<(&str, RateEstimate)> = Vec::new();
    for metric in [
        ErrorMetric::Position,
        ErrorMetric::Velocity,
        ErrorMetric::State,
        ErrorMetric::PathwiseMax,
    ] {
        match fit_rate(&records, metric) {
            Ok(rate) => rates.push((metric.name(), rate)),
            Err(e) => eprintln!("warning: skipping {} rate fit: {e}", metric.name()),
        }
    }
    if rates.is_empty() {
        eprintln!("warning: no rates fitted; rates.csv not written");
    } else {
        write_file(&out.join("rates.csv"), |w| write_rates_csv(&rates, w))?;
    }

    let spec = cfg.problem.build().map_err(|e| e.to_string())?;
    let mut manifest = base_manifest(command_name, &draft, &out);
    problem_manifest(&mut manifest, &spec);
    insert(&mut manifest, "samples", samples);
    insert(&mut manifest, "seed", seed);
    insert(&mut manifest, "moment", moment);
    insert(&mut manifest, "stepper", stepper);
    if let Some(w) = workers {
        insert(&mut manifest, "workers", w);
    }
    match kind {
        StudyKind::Space => {
            insert(&mut manifest, "kappa", join_usize(&cfg.kappas));
            insert(&mut manifest, "kappa-ref", cfg.kappa_ref);
            insert(&mut manifest, "h", cfg.h_ref);
        }
        StudyKind::Time => {
            insert(&mut manifest, "kappa", cfg.kappa_ref);
            insert(&mut manifest, "h", join_f64(&cfg.step_sizes));
            insert(&mut manifest, "h-ref", cfg.h_ref);
            insert(
                &mut manifest,
                "reference-stepper",
                cfg.reference_stepper.unwrap_or(cfg.stepper),
            );
        }
    }
    config::write_manifest(&out.join("manifest.txt"), &manifest)?;

    for r in &records {
        println!(
            "resolution {:>10}: position {:.4e}, velocity {:.4e}, state {:.4e}",
            r.resolution, r.err_pos, r.err_vel, r.err_state
        );
    }
    for (name, rate) in &rates {
        println!("fitted {name} slope {:+.4} (residual {:.2e})", rate.slope, rate.residual);
    }
    Ok(())
}

fn cmd_regularity(opts: &CommonOpts) -> Result<(), String> {
    let draft = resolve_draft(opts, Mode::Regularity)?;
    let out = resolve_out(&draft)?;
    let kappa = draft.get_usize("kappa")?.unwrap_or(128);
    let h_ref = draft.get_f64("h-ref")?.unwrap_or_else(|| 2.0_f64.powi(-10));
    let taus = draft
        .get_f64_list("tau")?
        .unwrap_or_else(|| vec![2.0_f64.powi(-4), 2.0_f64.powi(-3), 2.0_f64.powi(-2)]);
    let samples = draft.get_usize("samples")?.unwrap_or(20);
    let seed = draft.get_u64("seed")?.unwrap_or(1);
    let stepper: StepperKind = draft.get_parsed("stepper")?.unwrap_or(StepperKind::Stm);
    let workers = draft.get_usize("workers")?;

    let cfg = RegularityConfig {
        problem: build_problem(&draft, kappa)?,
        kappa,
        h_ref,
        taus: taus.clone(),
        samples,
        base_seed: seed,
        stepper,
        workers,
    };
    create_out_dir(&out)?;
    let result = empirical_time_regularity(&cfg).map_err(|e| e.to_string())?;

    write_file(&out.join("regularity.csv"), |w| write_regularity_csv(&result.points, w))?;
    write_file(&out.join("rates.csv"), |w| {
        write_rates_csv(&[("mean-sq-displacement", result.rate)], w)
    })?;

    let spec = cfg.problem.build().map_err(|e| e.to_string())?;
    let mut manifest = base_manifest("regularity", &draft, &out);
    problem_manifest(&mut manifest, &spec);
    insert(&mut manifest, "kappa", kappa);
    insert(&mut manifest, "h-ref", h_ref);
    insert(&mut manifest, "tau", join_f64(&taus));
    insert(&mut manifest, "samples", samples);
    insert(&mut manifest, "seed", seed);
    insert(&mut manifest, "stepper", stepper);
    if let Some(w) = workers {
        insert(&mut manifest, "workers", w);
    }
    config::write_manifest(&out.join("manifest.txt"), &manifest)?;

    println!(
        "mean-square displacement slope {:+.4} over {} lags (Hölder exponent estimate {:.3})",
        result.rate.slope,
        result.points.len(),
        result.rate.slope / 2.0
    );
    Ok(())
}

fn cmd_validate(opts: &ValidateOpts) -> Result<(), String> {
    let fault = match opts.inject_fault.as_deref() {
        None => FaultInjection::None,
        Some("group-l0") => FaultInjection::GroupTranslationBug,
        Some(other) => return Err(format!("unknown fault {other:?} (expected group-l0)")),
    };
    let results = run_checks(opts.kappa, fault);
    for r in &results {
        println!("{} {}: {}", if r.passed { "ok  " } else { "FAIL" }, r.name, r.detail);
    }
    if all_passed(&results) {
        println!("all {} checks passed", results.len());
        Ok(())
    } else {
        let failed = results.iter().filter(|r| !r.passed).count();
        Err(format!("{failed} of {} checks failed", results.len()))
    }
}
