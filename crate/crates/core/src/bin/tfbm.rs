use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tfbm_rough::experiments::{self, ConfigOverrides, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "tfbm", version, about = "Tempered fractional Brownian motion rough-path experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate sample paths and dump them as CSV and binary.
    Simulate(Common),
    /// Refinement errors of the Levy area across dyadic grids.
    LevyConvergence(Common),
    /// Strong convergence of the Milstein scheme for dY = Y dB.
    MilsteinConvergence(Common),
    /// Low signature levels of simulated paths.
    SignatureFeatures(Common),
    /// Covariance decomposition bounds and rho-variation tables.
    CovarianceCheck(Common),
    /// Dyadic rho-variation sweeps.
    RhoVariation(Common),
}

#[derive(Args)]
struct Common {
    /// Hurst indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    hurst: Option<Vec<f64>>,
    /// Tempering parameters, comma separated.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Grid size; for convergence runs, the finest resolution.
    #[arg(long, short = 'N')]
    steps: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long)]
    mc: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fewer Monte Carlo samples and wider slope tolerances.
    #[arg(long)]
    fast: bool,
}

impl Common {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            hurst: self.hurst.clone(),
            lambda: self.lambda.clone(),
            steps: self.steps,
            n_mc: self.mc,
            seed: self.seed,
            out: self.out.clone(),
            fast: self.fast.then_some(true),
            ..Default::default()
        }
    }
}

fn run(experiment: Experiment, args: &Common) -> tfbm_rough::Result<bool> {
    let file = args.config.as_deref().map(ConfigOverrides::from_file).transpose()?;
    let config = ExperimentConfig::resolve(experiment, file, args.overrides())?;
    let report = experiments::run(&config)?;
    print!("{report}");
    println!("outputs in {}", config.out.display());
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::LevyConvergence(a) => (Experiment::LevyConvergence, a),
        Command::MilsteinConvergence(a) => (Experiment::MilsteinConvergence, a),
        Command::SignatureFeatures(a) => (Experiment::SignatureFeatures, a),
        Command::CovarianceCheck(a) => (Experiment::CovarianceCheck, a),
        Command::RhoVariation(a) => (Experiment::RhoVariation, a),
    };
    match run(experiment, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
