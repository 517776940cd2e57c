//! Experiment drivers: each `run_*` takes a resolved [`ExperimentConfig`],
//! writes its CSVs under `config.out` and returns a report.
//!
//! Every CSV starts with the configuration echoed as `# `-prefixed TOML.
//! Cells with different `H` draw from disjoint random streams; cells sharing
//! `H` reuse the same normals across `lambda` (common random numbers), so
//! lambda comparisons are not swamped by sampling noise. Results never depend
//! on scheduling.

mod config;
mod convergence;
mod covariance;
mod signature;
mod simulate;

pub use config::{ConfigOverrides, Experiment, ExperimentConfig, DEFAULT_SEED, FAST_N_MC, FAST_TOLERANCE_BONUS};
pub use convergence::{
    run_levy_convergence, run_milstein_convergence, ConvergenceRow, LevyReport, MilsteinReport, SlopeFit,
};
pub use covariance::{
    run_covariance_check, run_rho_variation, CovarianceCell, CovarianceCheckReport, RhoRow, RhoVariationReport,
    RhoVariationSummary,
};
pub use signature::{run_signature_features, SignatureFeaturesReport, SignatureGroup};
pub use simulate::{run_simulate, SimulateReport};

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};

use crate::error::Result;
use crate::simulate::RngSpec;

/// Exponent used for rho-variation sweeps: `1/(2H)`, clamped to at least 1.
pub fn sweep_rho(hurst: f64) -> f64 {
    f64::max(1.0, 1.0 / (2.0 * hurst))
}

pub(crate) fn create_csv(config: &ExperimentConfig, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(&config.out)?;
    let mut w = BufWriter::new(File::create(config.out.join(name))?);
    w.write_all(config.echo().as_bytes())?;
    Ok(w)
}

pub(crate) fn stream_rng(config: &ExperimentConfig, block: usize) -> RngSpec {
    RngSpec::new(config.seed).with_stream((block as u64) << 32)
}

/// One `(H, lambda)` parameter cell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cell {
    pub hurst: f64,
    pub lambda: f64,
    pub rng: RngSpec,
}

/// Cells in configuration order, `H` outermost.
pub(crate) fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    config
        .hurst
        .iter()
        .enumerate()
        .flat_map(|(i, &hurst)| {
            config.lambda.iter().map(move |&lambda| Cell { hurst, lambda, rng: stream_rng(config, i) })
        })
        .collect()
}

/// Any experiment report.
#[derive(Debug, Clone)]
pub enum Report {
    Simulate(SimulateReport),
    Levy(LevyReport),
    Milstein(MilsteinReport),
    Signature(SignatureFeaturesReport),
    Covariance(CovarianceCheckReport),
    RhoVariation(RhoVariationReport),
}

impl Report {
    /// Whether every built-in check of the run passed.
    pub fn passed(&self) -> bool {
        match self {
            Report::Simulate(_) => true,
            Report::Levy(r) => r.passed(),
            Report::Milstein(r) => r.passed(),
            Report::Signature(r) => r.passed(),
            Report::Covariance(r) => r.passed(),
            Report::RhoVariation(r) => r.passed(),
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Report::Simulate(r) => r.fmt(f),
            Report::Levy(r) => r.fmt(f),
            Report::Milstein(r) => r.fmt(f),
            Report::Signature(r) => r.fmt(f),
            Report::Covariance(r) => r.fmt(f),
            Report::RhoVariation(r) => r.fmt(f),
        }
    }
}

/// Dispatch on `config.experiment`.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    Ok(match config.experiment {
        Experiment::Simulate => Report::Simulate(run_simulate(config)?),
        Experiment::LevyConvergence => Report::Levy(run_levy_convergence(config)?),
        Experiment::MilsteinConvergence => Report::Milstein(run_milstein_convergence(config)?),
        Experiment::SignatureFeatures => Report::Signature(run_signature_features(config)?),
        Experiment::CovarianceCheck => Report::Covariance(run_covariance_check(config)?),
        Experiment::RhoVariation => Report::RhoVariation(run_rho_variation(config)?),
    })
}
