use std::path::PathBuf;
use std::process::ExitCode;

use bessel_dt::lab::{self, Experiment, ExperimentConfig, LabError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bessel-dt", version, about = "Differential transforms of the Bessel-Poisson semigroup")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized sweeps, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel values and derivatives.
    KernelEval(Common),
    /// Fitted constants of the kernel estimates.
    BoundsSuite(Common),
    /// T_N f and T*_M f on the evaluation grid.
    Transform(Common),
    /// Log growth of T*_M averages near the origin.
    Loggrowth(Common),
    /// L2 ratios of T_N over random inputs and windows.
    UniformL2(Common),
    /// Weighted L^p ratios of T*_M.
    Weighted(Common),
    /// BMO ratios of T_N.
    Bmo(Common),
    /// L1 norms of kernel differences.
    L1diff(Common),
    /// Hankel transform identities.
    HankelCheck(Common),
}

impl Command {
    fn split(&self) -> (Experiment, &Common) {
        match self {
            Command::KernelEval(c) => (Experiment::KernelEval, c),
            Command::BoundsSuite(c) => (Experiment::BoundsSuite, c),
            Command::Transform(c) => (Experiment::Transform, c),
            Command::Loggrowth(c) => (Experiment::LogGrowth, c),
            Command::UniformL2(c) => (Experiment::UniformL2, c),
            Command::Weighted(c) => (Experiment::Weighted, c),
            Command::Bmo(c) => (Experiment::Bmo, c),
            Command::L1diff(c) => (Experiment::L1Diff, c),
            Command::HankelCheck(c) => (Experiment::HankelCheck, c),
        }
    }
}

fn load(experiment: Experiment, common: &Common) -> Result<ExperimentConfig, LabError> {
    let mut cfg = match &common.config {
        Some(path) => lab::parse_config(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(e) = cfg.experiment {
        if e != experiment {
            return Err(lab::ConfigError {
                line: None,
                message: format!("config selects `{}` but the command is `{}`", e.name(), experiment.name()),
            }
            .into());
        }
    }
    cfg.experiment = Some(experiment);
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool, LabError> {
    let (experiment, common) = cli.command.split();
    let cfg = load(experiment, common)?;
    let report = lab::run(&cfg)?;
    match &cfg.out {
        Some(path) => lab::emit_csv(&report, path)?,
        None => lab::write_csv(&report, std::io::stdout().lock())?,
    }
    for (k, v) in &report.summary {
        eprintln!("{k} = {v:.16e}");
    }
    for c in &report.contracts {
        let status = if c.passed { "PASS" } else { "FAIL" };
        eprintln!("{status} {}: {}", c.name, c.detail);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
