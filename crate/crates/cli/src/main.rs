use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hseom_cli::config::{Experiment, RunConfig};
use hseom_cli::error::CliError;
use hseom_cli::run::{check_resources, estimate, run, RunOptions};

#[derive(Parser)]
#[command(name = "hseom", version, about = "Hierarchical Schrödinger equations of motion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the hierarchy sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Pin the worker pool so that reruns produce identical bytes.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Allow hierarchies beyond the desk-scale size limit.
    #[arg(long, global = true)]
    full: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Fit the Bessel expansion and compare it with quadrature.
    BathFit,
    /// First-order response function and its spectrum.
    Respond,
    /// p-spin annealing populations.
    Anneal,
    /// Reduced density matrix trajectory.
    Rdm,
    /// Engine-versus-oracle residuals.
    Validate,
    /// Resource estimate for the configured experiment.
    Preflight,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::new(Experiment::Validate),
    };
    config.experiment = match cli.command {
        Command::BathFit => Experiment::BathFit,
        Command::Respond => Experiment::Respond,
        Command::Anneal => Experiment::Anneal,
        Command::Rdm => Experiment::Rdm,
        Command::Validate => Experiment::Validate,
        Command::Preflight => config.experiment,
    };
    if cli.workers.is_some() {
        config.workers = cli.workers;
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: &Cli, config: &RunConfig, options: &RunOptions) -> Result<bool, CliError> {
    let workers = config.workers.or(cli.deterministic.then_some(1));
    if let Some(n) = workers {
        hseom::set_workers(n);
    }
    if let Command::Preflight = cli.command {
        let plan = estimate(config)?;
        println!("{}", plan.report());
        check_resources(&plan, config, options)?;
        return Ok(true);
    }
    let report = run(config, options)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", serde_json::to_string_pretty(&report.summary).unwrap_or_default());
    for f in &report.files {
        println!("wrote {}", report.dir.join(f).display());
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = cli.out.clone();
    let result = load(&cli).and_then(|config| {
        out.get_or_insert_with(|| config.output.dir.clone());
        let options = RunOptions { out: out.clone(), full: cli.full };
        execute(&cli, &config, &options)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{e}");
            if let Some(dir) = out.filter(|_| !matches!(cli.command, Command::Preflight)) {
                if std::fs::create_dir_all(&dir).is_ok() {
                    let record = serde_json::to_string_pretty(&e.record()).unwrap_or_default();
                    let _ = std::fs::write(dir.join("error.json"), record + "\n");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
