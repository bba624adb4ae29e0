//! Experiment drivers.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use hseom::bath::{
    alpha_quadrature, alpha_reconstruct, compute_coefficients, expansion_error, jacobi_anger_residual, tail_fraction,
    BathExpansion, BathSpec,
};
use hseom::dynamics::Generator;
use hseom::hierarchy::{awf_count, build_space, HierarchySpace};
use hseom::models::{
    pspin_annealing, pure_dephasing, spin_boson, uniform_superposition_transform, InitialState, Operator, SystemModel,
    SPIN_BOSON_EXCITED, SPIN_BOSON_GROUND,
};
use hseom::observables::{
    annealing_populations, default_equilibration_time, default_step, density_trajectory, dominant_peak, fit_step,
    half_fourier, response_function,
};
use hseom::C64;

use crate::config::{Experiment, InitialChoice, ModelConfig, RunConfig};
use crate::error::CliError;
use crate::output::{svg_from_csv, write_text, Table};
use crate::validate::validation_suite;

/// Hierarchies above this many wave functions only run with `--full`.
pub const DESK_MAX_AWFS: u128 = 20_000;

/// Integrator workspace held next to the stack, in stack-sized vectors.
const WORKSPACE_FACTOR: u128 = 5;

/// Jacobi–Anger residual above which the basis size is flagged as too small for the horizon.
const HORIZON_RESIDUAL: f64 = 1e-6;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub full: bool,
}

/// Defaults resolved against the configuration: step, horizons and record stride.
#[derive(Clone, Debug)]
pub struct Plan {
    pub experiment: Experiment,
    pub dim: usize,
    pub modes: usize,
    pub levels: usize,
    pub awf_count: u128,
    pub estimated_bytes: u128,
    pub dt: f64,
    pub horizon: f64,
    pub t0: f64,
    pub steps: u64,
    pub stride: usize,
    pub warnings: Vec<String>,
}

impl Plan {
    pub fn to_json(&self) -> Value {
        json!({
            "experiment": self.experiment.name(),
            "dim": self.dim,
            "modes": self.modes,
            "levels": self.levels,
            "awf_count": self.awf_count.to_string(),
            "estimated_bytes": self.estimated_bytes.to_string(),
            "dt": self.dt,
            "horizon": self.horizon,
            "t0": self.t0,
            "steps": self.steps,
            "record_stride": self.stride,
        })
    }

    pub fn report(&self) -> String {
        let mut lines = vec![
            format!("experiment = {}", self.experiment.name()),
            format!("awf_count = {}", self.awf_count),
            format!("dim = {}", self.dim),
            format!("estimated_bytes = {}", self.estimated_bytes),
            format!("steps = {}", self.steps),
            format!("dt = {}", self.dt),
        ];
        lines.extend(self.warnings.iter().map(|w| format!("warning: {w}")));
        lines.join("\n")
    }
}

fn model_dim(model: &ModelConfig) -> usize {
    match model {
        ModelConfig::SpinBoson { .. } | ModelConfig::PureDephasing { .. } => 2,
        ModelConfig::Pspin { qubits, .. } => 1 << qubits,
    }
}

fn steps_of(span: f64, dt: f64) -> u64 {
    (span / dt).round() as u64
}

/// Resolve defaults and check resources without running anything.
pub fn preflight(config: &RunConfig, options: &RunOptions) -> Result<Plan, CliError> {
    let plan = estimate(config)?;
    check_resources(&plan, config, options)?;
    Ok(plan)
}

/// Resolve defaults and estimate resources.
pub fn estimate(config: &RunConfig) -> Result<Plan, CliError> {
    config.validate()?;
    let experiment = config.experiment;
    let dim = model_dim(&config.model);
    let modes = config.bath.modes;
    let levels = config.hierarchy.levels;
    let mut warnings = Vec::new();
    let mut plan = Plan {
        experiment,
        dim,
        modes,
        levels,
        awf_count: 0,
        estimated_bytes: 0,
        dt: 0.0,
        horizon: 0.0,
        t0: 0.0,
        steps: 0,
        stride: 1,
        warnings: Vec::new(),
    };
    if experiment == Experiment::Validate {
        return Ok(plan);
    }
    let spec = config.bath.spec()?;
    plan.awf_count = awf_count(modes, levels)?;
    plan.estimated_bytes = plan.awf_count * dim as u128 * 16 * (1 + WORKSPACE_FACTOR);

    let horizon = match (&config.model, experiment) {
        (ModelConfig::Pspin { t_final, .. }, Experiment::Anneal) => *t_final,
        (_, Experiment::Respond) => config.horizon.t.unwrap_or(6.0),
        _ => config.horizon.t.unwrap_or(2.0),
    };
    let dt = fit_step(horizon, config.integrator.dt.map_or_else(|| default_step(spec.omega, horizon), Ok)?)?;
    let t0 = if experiment == Experiment::Respond {
        let t0 =
            config.horizon.t0.unwrap_or_else(|| default_equilibration_time(config.bath.coupling, config.bath.cutoff));
        if !t0.is_finite() {
            return Err(CliError::config("horizon.t0", "no default without coupling; set it explicitly"));
        }
        (t0 / dt).round() * dt
    } else {
        0.0
    };
    plan.dt = dt;
    plan.horizon = horizon;
    plan.t0 = t0;
    if experiment != Experiment::BathFit {
        plan.steps = steps_of(horizon + t0, dt);
        let interval = config.horizon.record_interval.unwrap_or(if experiment == Experiment::Respond {
            dt
        } else {
            horizon / 100.0
        });
        plan.stride = ((interval / dt).round() as usize).max(1);
    }

    let span = horizon + t0;
    let residual = jacobi_anger_residual(1.0, span, spec.modes, spec.omega);
    if residual > HORIZON_RESIDUAL {
        warnings.push(format!(
            "K = {} Bessel functions do not resolve the bath up to t = {span} (Jacobi-Anger residual {residual:.2e})",
            spec.modes
        ));
    }
    plan.warnings = warnings;
    Ok(plan)
}

/// Refuse plans over the memory budget or, without `--full`, over the desk-scale size.
pub fn check_resources(plan: &Plan, config: &RunConfig, options: &RunOptions) -> Result<(), CliError> {
    if !matches!(plan.experiment, Experiment::BathFit | Experiment::Validate) {
        if plan.estimated_bytes > config.hierarchy.budget_bytes as u128 {
            return Err(CliError::Resource(format!(
                "estimated {} bytes exceed the budget of {} bytes",
                plan.estimated_bytes, config.hierarchy.budget_bytes
            )));
        }
        if plan.awf_count > DESK_MAX_AWFS && !options.full {
            return Err(CliError::Resource(format!(
                "{} wave functions exceed the desk-scale limit of {DESK_MAX_AWFS}; pass --full to run anyway",
                plan.awf_count
            )));
        }
    }
    Ok(())
}

pub struct Report {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub summary: Value,
    pub warnings: Vec<String>,
    /// Whether every check passed; only meaningful for `validate`.
    pub passed: bool,
}

struct Artifacts<'a> {
    dir: &'a Path,
    svg: bool,
    files: Vec<String>,
}

impl Artifacts<'_> {
    fn table(&mut self, name: &str, table: &Table, title: &str) -> Result<(), CliError> {
        let text = table.to_csv()?;
        write_text(&self.dir.join(format!("{name}.csv")), &text)?;
        self.files.push(format!("{name}.csv"));
        if self.svg {
            write_text(&self.dir.join(format!("{name}.svg")), &svg_from_csv(&text, title)?)?;
            self.files.push(format!("{name}.svg"));
        }
        Ok(())
    }

    fn plot_as(&mut self, csv_name: &str, svg_name: &str, title: &str) -> Result<(), CliError> {
        if self.svg {
            let text = std::fs::read_to_string(self.dir.join(csv_name))?;
            write_text(&self.dir.join(svg_name), &svg_from_csv(&text, title)?)?;
            self.files.push(svg_name.to_owned());
        }
        Ok(())
    }
}

fn build_model(model: &ModelConfig) -> Result<SystemModel, CliError> {
    Ok(match *model {
        ModelConfig::SpinBoson { omega0, .. } => spin_boson(omega0)?,
        ModelConfig::PureDephasing { omega0, .. } => pure_dephasing(omega0)?,
        ModelConfig::Pspin { qubits, gamma, p, t_final } => pspin_annealing(qubits, gamma, p, t_final)?,
    })
}

fn build_initial(model: &ModelConfig) -> Result<InitialState, CliError> {
    Ok(match model {
        ModelConfig::SpinBoson { initial, .. } | ModelConfig::PureDephasing { initial, .. } => match initial {
            InitialChoice::Ground => InitialState::basis_state(2, SPIN_BOSON_GROUND)?,
            InitialChoice::Excited => InitialState::basis_state(2, SPIN_BOSON_EXCITED)?,
            InitialChoice::Plus => {
                let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                InitialState::pure(vec![a, a])?
            }
        },
        ModelConfig::Pspin { qubits, .. } => uniform_superposition_transform(*qubits)?,
    })
}

struct Setup {
    spec: BathSpec,
    bath: BathExpansion,
    space: HierarchySpace,
    model: SystemModel,
}

impl Setup {
    fn new(config: &RunConfig, plan: &Plan) -> Result<Self, CliError> {
        let spec = config.bath.spec()?;
        let bath = compute_coefficients(&spec)?;
        let space = build_space(plan.modes, plan.levels)?;
        let model = build_model(&config.model)?;
        Ok(Self { spec, bath, space, model })
    }

    fn generator(&self) -> Result<Generator<'_>, CliError> {
        Ok(Generator::new(&self.space, &self.bath, &self.model)?)
    }
}

/// Run the configured experiment and write its artifacts and manifest.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<Report, CliError> {
    let started = Instant::now();
    let dir = options.out.clone().unwrap_or_else(|| config.output.dir.clone());
    let plan = preflight(config, options)?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut artifacts = Artifacts { dir: &dir, svg: config.output.svg, files: Vec::new() };
    let mut warnings = plan.warnings.clone();
    let mut passed = true;

    let summary = match config.experiment {
        Experiment::BathFit => bath_fit(config, &plan, &mut artifacts, &mut warnings)?,
        Experiment::Respond => respond(config, &plan, &mut artifacts, &mut warnings)?,
        Experiment::Anneal => anneal(config, &plan, &mut artifacts)?,
        Experiment::Rdm => rdm(config, &plan, &mut artifacts)?,
        Experiment::Validate => {
            let checks = validation_suite()?;
            let mut table = Table::new(["check", "residual (dimensionless)", "threshold (dimensionless)", "pass"]);
            for c in &checks {
                table.rows.push(vec![
                    c.name.clone(),
                    crate::output::number(c.residual),
                    crate::output::number(c.threshold),
                    c.passed().to_string(),
                ]);
            }
            write_text(&dir.join("validate.csv"), &table.to_csv()?)?;
            artifacts.files.push("validate.csv".into());
            passed = checks.iter().all(|c| c.passed());
            json!({ "checks": checks.len(), "failed": checks.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect::<Vec<_>>() })
        }
    };

    let files = artifacts.files;
    let manifest = json!({
        "tool": "hseom",
        "version": env!("CARGO_PKG_VERSION"),
        "library_version": hseom::VERSION,
        "experiment": config.experiment.name(),
        "config": config.to_toml(),
        "plan": plan.to_json(),
        "summary": summary,
        "warnings": warnings,
        "outputs": files,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    write_text(&dir.join("manifest.json"), &(text + "\n"))?;
    Ok(Report { dir, files, summary, warnings, passed })
}

fn bath_fit(
    config: &RunConfig,
    plan: &Plan,
    out: &mut Artifacts<'_>,
    warnings: &mut Vec<String>,
) -> Result<Value, CliError> {
    let spec = config.bath.spec()?;
    let expansion = compute_coefficients(&spec)?;
    warnings.extend(expansion.warnings.iter().cloned());

    let mut coefficients = Table::new(["k (index)", "re_c (frequency^2)", "im_c (frequency^2)"]);
    for (k, c) in expansion.c.iter().enumerate() {
        coefficients.push_numbers(&[k as f64, c.re, c.im]);
    }
    out.table("coefficients", &coefficients, "Bessel coefficients c_k")?;

    let mut alpha = Table::new([
        "t (time)",
        "re_alpha_quadrature (frequency^2)",
        "im_alpha_quadrature (frequency^2)",
        "re_alpha_expansion (frequency^2)",
        "im_alpha_expansion (frequency^2)",
    ]);
    const POINTS: usize = 201;
    for j in 0..POINTS {
        let t = plan.horizon * j as f64 / (POINTS - 1) as f64;
        let exact = alpha_quadrature(&spec, t)?;
        let approx = alpha_reconstruct(&expansion, t);
        alpha.push_numbers(&[t, exact.re, exact.im, approx.re, approx.im]);
    }
    out.table("alpha", &alpha, "bath correlation function")?;

    Ok(json!({
        "omega": spec.omega,
        "modes": spec.modes,
        "max_relative_deviation": expansion_error(&expansion, &spec, plan.horizon, POINTS)?,
        "tail_fraction": tail_fraction(&spec)?,
        "phi_at_zero_sum": expansion.phi_at_zero.iter().sum::<f64>(),
    }))
}

fn respond(
    config: &RunConfig,
    plan: &Plan,
    out: &mut Artifacts<'_>,
    warnings: &mut Vec<String>,
) -> Result<Value, CliError> {
    let setup = Setup::new(config, plan)?;
    let generator = setup.generator()?;
    let init = InitialState::localized(SPIN_BOSON_GROUND, Operator::Identity(2))?;
    let result = response_function(&generator, &init, plan.t0, plan.horizon, plan.dt, plan.stride)?;
    warnings.extend(result.warnings.iter().cloned());
    let r = result.imaginary();

    let mut series = Table::new(["t (time)", "R (dimensionless)"]);
    for (t, v) in result.times.iter().zip(&r) {
        series.push_numbers(&[*t, *v]);
    }
    let text = series.to_csv()?;
    write_text(&out.dir.join("response_t.csv"), &text)?;
    out.files.push("response_t.csv".into());

    let omegas = config.spectrum.grid();
    let spectrum = half_fourier(&result.times, &r, &omegas, config.spectrum.window)?;
    let mut table = Table::new(["omega (rad/time)", "re_R (time)", "im_R (time)"]);
    for (w, v) in spectrum.omegas.iter().zip(&spectrum.values) {
        table.push_numbers(&[*w, v.re, v.im]);
    }
    write_text(&out.dir.join("response_w.csv"), &table.to_csv()?)?;
    out.files.push("response_w.csv".into());
    out.plot_as("response_w.csv", "response.svg", "first-order response spectrum")?;

    let peak = dominant_peak(&spectrum, |v| -v.im);
    Ok(json!({
        "t0": plan.t0,
        "dt": plan.dt,
        "drift": result.drift,
        "window": spectrum.window,
        "peak_omega": peak.map(|p| p.omega),
        "peak_height": peak.map(|p| p.height),
        "runner_up_height": peak.map(|p| p.runner_up),
        "expansion_frequency": setup.spec.omega,
    }))
}

fn anneal(config: &RunConfig, plan: &Plan, out: &mut Artifacts<'_>) -> Result<Value, CliError> {
    let ModelConfig::Pspin { qubits, .. } = config.model else {
        return Err(CliError::config("model.kind", "anneal needs the p-spin model"));
    };
    let setup = Setup::new(config, plan)?;
    let generator = setup.generator()?;
    let init = build_initial(&config.model)?;
    let traj = annealing_populations(&generator, &init, qubits, plan.horizon, plan.dt, plan.stride)?;
    let mut table =
        Table::new(["t (time)", "P_ground (probability)", "P_e_rep (probability)", "P_e_sum (probability)"]);
    for j in 0..traj.times.len() {
        table.push_numbers(&[traj.times[j], traj.ground[j], traj.excited_representative[j], traj.excited_sum[j]]);
    }
    out.table("populations", &table, "annealing populations")?;
    Ok(json!({
        "final_ground": traj.ground.last(),
        "final_excited_sum": traj.excited_sum.last(),
        "dt": plan.dt,
    }))
}

fn rdm(config: &RunConfig, plan: &Plan, out: &mut Artifacts<'_>) -> Result<Value, CliError> {
    let setup = Setup::new(config, plan)?;
    let generator = setup.generator()?;
    let init = build_initial(&config.model)?;
    let traj = density_trajectory(&generator, &init, plan.horizon, plan.dt, plan.stride)?;
    let dim = plan.dim;
    let mut header = vec!["t (time)".to_owned()];
    for i in 0..dim {
        for j in 0..dim {
            header.push(format!("re_rho_{i}_{j} (dimensionless)"));
            header.push(format!("im_rho_{i}_{j} (dimensionless)"));
        }
    }
    let mut table = Table::new(header);
    let mut populations = Table::new(
        std::iter::once("t (time)".to_owned()).chain((0..dim).map(|k| format!("rho_{k}_{k} (probability)"))),
    );
    let (mut hermiticity, mut trace_error) = (0.0_f64, 0.0_f64);
    for (t, rho) in &traj {
        let mut row = vec![*t];
        for i in 0..dim {
            for j in 0..dim {
                row.push(rho[(i, j)].re);
                row.push(rho[(i, j)].im);
            }
        }
        table.push_numbers(&row);
        populations.push_numbers(&std::iter::once(*t).chain((0..dim).map(|k| rho[(k, k)].re)).collect::<Vec<_>>());
        hermiticity = hermiticity.max((rho - rho.adjoint()).iter().fold(0.0, |m, x| m.max(x.norm())));
        trace_error = trace_error.max((rho.trace() - 1.0).norm());
    }
    let text = table.to_csv()?;
    write_text(&out.dir.join("rdm.csv"), &text)?;
    out.files.push("rdm.csv".into());
    out.table("populations", &populations, "reduced density matrix populations")?;
    Ok(json!({
        "max_hermiticity_deviation": hermiticity,
        "max_trace_deviation": trace_error,
        "dt": plan.dt,
        "records": traj.len(),
    }))
}
