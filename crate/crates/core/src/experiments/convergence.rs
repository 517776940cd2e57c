use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use super::{cells, create_csv, stream_rng, ExperimentConfig};
use crate::error::Result;
use crate::params::ModelParams;
use crate::rde::{milstein_solve, strong_error, ScalarLinear};
use crate::roughpath::{lift_piecewise_linear, refinement_errors};
use crate::simulate::simulate_paths;
use crate::stats::loglog_fit;

const SLOPE_TOLERANCE: f64 = 0.15;
/// Fine grid of the dumped sample trajectory and the coarse solve on it.
const TRAJECTORY_FINE: usize = 1000;
const TRAJECTORY_COARSE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub hurst: f64,
    pub lambda: f64,
    pub n: usize,
    pub error: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub hurst: f64,
    pub lambda: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl SlopeFit {
    pub fn passed(&self) -> bool {
        (self.slope - self.expected).abs() <= self.tolerance
    }
}

impl fmt::Display for SlopeFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "H={:<4} lambda={:<5} slope={:+.3} (se {:.3}) expected {:+.3} +/- {:.2} [{}]",
            self.hurst,
            self.lambda,
            self.slope,
            self.slope_stderr,
            self.expected,
            self.tolerance,
            if self.passed() { "ok" } else { "off" }
        )
    }
}

fn fit_cell(rows: &[ConvergenceRow], hurst: f64, lambda: f64, expected: f64, tolerance: f64) -> Result<SlopeFit> {
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let fit = loglog_fit(&xs, &ys)?;
    Ok(SlopeFit { hurst, lambda, slope: fit.slope, slope_stderr: fit.slope_stderr, expected, tolerance })
}

fn write_rows(config: &ExperimentConfig, name: &str, n_label: &str, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = create_csv(config, name)?;
    writeln!(w, "H,lambda,{n_label},error,stderr")?;
    for r in rows {
        writeln!(w, "{},{},{},{:.10e},{:.10e}", r.hurst, r.lambda, r.n, r.error, r.stderr)?;
    }
    w.flush()?;
    Ok(())
}

fn write_fits(config: &ExperimentConfig, name: &str, fits: &[SlopeFit]) -> Result<()> {
    let mut w = create_csv(config, name)?;
    writeln!(w, "H,lambda,slope,slope_stderr,expected,tolerance,passed")?;
    for s in fits {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{},{},{}",
            s.hurst,
            s.lambda,
            s.slope,
            s.slope_stderr,
            s.expected,
            s.tolerance,
            s.passed()
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Refinement errors `e(N)` of the level-2 lift.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyReport {
    pub rows: Vec<ConvergenceRow>,
    pub fits: Vec<SlopeFit>,
}

impl LevyReport {
    pub fn errors(&self, hurst: f64, lambda: f64) -> Vec<ConvergenceRow> {
        self.rows.iter().filter(|r| r.hurst == hurst && r.lambda == lambda).copied().collect()
    }

    pub fn fit(&self, hurst: f64, lambda: f64) -> Option<SlopeFit> {
        self.fits.iter().find(|f| f.hurst == hurst && f.lambda == lambda).copied()
    }

    /// Whether `e(N)` strictly decreases in lambda at every `N >= min_n` for
    /// this `H`. `None` when fewer than two lambdas were run.
    pub fn lambda_ordering(&self, hurst: f64, min_n: usize) -> Option<bool> {
        let mut lambdas: Vec<f64> = self.rows.iter().filter(|r| r.hurst == hurst).map(|r| r.lambda).collect();
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();
        if lambdas.len() < 2 {
            return None;
        }
        let ns: Vec<usize> = self.errors(hurst, lambdas[0]).iter().map(|r| r.n).filter(|&n| n >= min_n).collect();
        Some(ns.iter().all(|&n| {
            let errs: Vec<f64> = lambdas
                .iter()
                .filter_map(|&l| self.rows.iter().find(|r| r.hurst == hurst && r.lambda == l && r.n == n))
                .map(|r| r.error)
                .collect();
            errs.windows(2).all(|w| w[1] < w[0])
        }))
    }

    pub fn passed(&self) -> bool {
        self.fits.iter().all(SlopeFit::passed)
    }
}

impl fmt::Display for LevyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "levy-convergence: slope of e(N) against -2H")?;
        for s in &self.fits {
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

/// Writes `levy_convergence.csv` (`H,lambda,N,error,stderr`) and `levy_slopes.csv`.
pub fn run_levy_convergence(config: &ExperimentConfig) -> Result<LevyReport> {
    config.validate()?;
    let tol = SLOPE_TOLERANCE + config.tolerance_bonus();
    let per_cell: Vec<(Vec<ConvergenceRow>, SlopeFit)> = cells(config)
        .into_par_iter()
        .map(|c| {
            let (h, l) = (c.hurst, c.lambda);
            let params = ModelParams::new(h, l, config.dim, config.horizon)?;
            let errs = refinement_errors(&params, &config.resolutions, config.n_mc, c.rng)?;
            let rows: Vec<ConvergenceRow> = errs
                .iter()
                .map(|e| ConvergenceRow { hurst: h, lambda: l, n: e.n, error: e.error, stderr: e.stderr })
                .collect();
            let fit = fit_cell(&rows, h, l, -2.0 * h, tol)?;
            log::info!("levy H={h} lambda={l}: slope {:.3}", fit.slope);
            Ok((rows, fit))
        })
        .collect::<Result<_>>()?;
    let (rows, fits): (Vec<_>, Vec<_>) = per_cell.into_iter().unzip();
    let report = LevyReport { rows: rows.concat(), fits };
    write_rows(config, "levy_convergence.csv", "N", &report.rows)?;
    write_fits(config, "levy_slopes.csv", &report.fits)?;
    Ok(report)
}

/// Strong errors of the Milstein scheme for `dY = Y dB`, `Y_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MilsteinReport {
    pub rows: Vec<ConvergenceRow>,
    pub fits: Vec<SlopeFit>,
    /// Rows in the dumped coarse trajectory.
    pub trajectory_rows: usize,
}

impl MilsteinReport {
    pub fn fit(&self, hurst: f64, lambda: f64) -> Option<SlopeFit> {
        self.fits.iter().find(|f| f.hurst == hurst && f.lambda == lambda).copied()
    }

    pub fn passed(&self) -> bool {
        self.fits.iter().all(SlopeFit::passed)
    }
}

impl fmt::Display for MilsteinReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "milstein-convergence: slope of the strong error against -H")?;
        for s in &self.fits {
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

/// Writes `milstein_convergence.csv` (`H,lambda,n,error,stderr`), `milstein_slopes.csv`,
/// and for the first `(H, lambda)` a sample driver with its exact solution
/// (`milstein_path.csv`) and the 100-step Milstein approximation (`milstein_approx.csv`).
pub fn run_milstein_convergence(config: &ExperimentConfig) -> Result<MilsteinReport> {
    config.validate()?;
    let tol = SLOPE_TOLERANCE + config.tolerance_bonus();
    let cell_list = cells(config);
    let per_cell: Vec<(Vec<ConvergenceRow>, SlopeFit)> = cell_list
        .par_iter()
        .map(|c| {
            let (h, l) = (c.hurst, c.lambda);
            let params = ModelParams::new(h, l, 1, config.horizon)?;
            let rep = strong_error(&params, &ScalarLinear, &[1.0], &config.resolutions, config.n_mc, c.rng)?;
            let rows: Vec<ConvergenceRow> = rep
                .resolutions
                .iter()
                .zip(rep.errors.iter().zip(&rep.stderrs))
                .map(|(&n, (&error, &stderr))| ConvergenceRow { hurst: h, lambda: l, n, error, stderr })
                .collect();
            let fit = fit_cell(&rows, h, l, -h, tol)?;
            log::info!("milstein H={h} lambda={l}: slope {:.3}", fit.slope);
            Ok((rows, fit))
        })
        .collect::<Result<_>>()?;
    let (rows, fits): (Vec<_>, Vec<_>) = per_cell.into_iter().unzip();
    write_rows(config, "milstein_convergence.csv", "n", &rows.concat())?;
    write_fits(config, "milstein_slopes.csv", &fits)?;

    let first = cell_list[0];
    let params = ModelParams::new(first.hurst, first.lambda, 1, config.horizon)?;
    let rng = stream_rng(config, config.hurst.len());
    let path = simulate_paths(&params, TRAJECTORY_FINE, 1, rng)?.paths.remove(0);
    let mut w = create_csv(config, "milstein_path.csv")?;
    writeln!(w, "t,B,Y")?;
    for (k, t) in path.partition().times().iter().enumerate() {
        let b = path.value(k, 0);
        writeln!(w, "{t:.10e},{b:.10e},{:.10e}", b.exp())?;
    }
    w.flush()?;
    let coarse = path.coarsen(TRAJECTORY_FINE / TRAJECTORY_COARSE)?;
    let traj = milstein_solve(&ScalarLinear, &[1.0], &lift_piecewise_linear(&coarse)?)?;
    let mut w = create_csv(config, "milstein_approx.csv")?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    Ok(MilsteinReport { rows: rows.concat(), fits, trajectory_rows: traj.len() })
}
