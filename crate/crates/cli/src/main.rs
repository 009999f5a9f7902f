use std::path::PathBuf;
use std::process::ExitCode;

use chac_core::config::RunConfig;
use chac_core::experiments::{ExperimentKind, ExperimentPlan, Status};
use clap::{Args, Parser, Subcommand};

/// Stochastic Cahn-Hilliard / conserved Allen-Cahn experiments.
#[derive(Parser)]
#[command(name = "chac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble of trajectories with pathwise mass and bound checks.
    Simulate(Common),
    /// Mass gap of the regularized scheme along the lambda grid.
    MassGap(Common),
    /// Coupled runs against the pure Allen-Cahn limit along the alpha grid.
    ViscositySweep(Common),
    /// Coupled regularized runs along the lambda grid.
    YosidaSweep(Common),
    /// Continuous dependence on initial data.
    Dependence(Common),
    /// Decay rate of a small perturbation against the linearization.
    LinearRate(Common),
    /// Randomized checks of the operator, potential and noise estimates.
    Properties(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `noise.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `experiment.paths`.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Write field snapshots at every recorded time.
    #[arg(long)]
    snapshots: bool,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::Simulate(c) => (ExperimentKind::Simulate, c),
            Command::MassGap(c) => (ExperimentKind::MassGap, c),
            Command::ViscositySweep(c) => (ExperimentKind::ViscositySweep, c),
            Command::YosidaSweep(c) => (ExperimentKind::YosidaSweep, c),
            Command::Dependence(c) => (ExperimentKind::Dependence, c),
            Command::LinearRate(c) => (ExperimentKind::LinearRate, c),
            Command::Properties(c) => (ExperimentKind::PropertySuite, c),
        }
    }
}

fn execute(kind: ExperimentKind, args: Common) -> chac_core::Result<bool> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.noise.seed = seed;
    }
    if let Some(paths) = args.paths {
        config.experiment.paths = paths;
    }
    config.output.snapshots |= args.snapshots;
    let report = ExperimentPlan::new(kind, config.clone(), args.threads)?.run()?;
    report.write(&args.out, &config)?;
    for row in report.rows.iter().filter(|r| r.status != Status::Info) {
        eprintln!("{:<4} {} {:e} {}", row.status.as_str(), row.name, row.value, row.note);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    match execute(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
