use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dlgibbs_cli::{execute, parse_config_for, CliError, Experiment};

#[derive(Parser)]
#[command(name = "dlgibbs", version, about = "Detectability-lemma Gibbs sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cyclic sampler mixing trace.
    Mix(Common),
    /// Approximate ground-space projector sweep.
    Project(Common),
    /// Parent Hamiltonian checks.
    Parent(Common),
    /// Annealed purified Gibbs state preparation.
    Anneal(Common),
    /// Purified-state overlap scaling.
    Overlap(Common),
    /// Closed-form cost estimates next to measured tallies.
    Estimate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides model.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Treat warnings as bound violations.
    #[arg(long)]
    strict: bool,
}

fn run(experiment: Experiment, args: &Common) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|source| CliError::Io { path: args.config.display().to_string(), source })?;
    let mut cfg = parse_config_for(&text, Some(experiment))?;
    if cfg.experiment != experiment {
        return Err(CliError::ExperimentMismatch {
            subcommand: experiment.to_string(),
            experiment: cfg.experiment.to_string(),
        });
    }
    if let Some(seed) = args.seed {
        cfg.model.seed = Some(seed);
    }
    let report = execute(&cfg, args.strict)?;
    for path in report.write(&cfg, &args.out)? {
        println!("wrote {}", path.display());
    }
    if report.passed() {
        println!("{}: all checks passed", experiment);
    } else {
        println!("{}: {} violation(s)", experiment, report.violations.len());
        for v in &report.violations {
            println!("  {}: {:e} (limit {:e})", v.check, v.value, v.limit);
        }
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Mix(a) => (Experiment::Mix, a),
        Command::Project(a) => (Experiment::Project, a),
        Command::Parent(a) => (Experiment::Parent, a),
        Command::Anneal(a) => (Experiment::Anneal, a),
        Command::Overlap(a) => (Experiment::Overlap, a),
        Command::Estimate(a) => (Experiment::Estimate, a),
    };
    match run(experiment, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
