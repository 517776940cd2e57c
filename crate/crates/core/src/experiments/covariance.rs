use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use super::{cells, create_csv, sweep_rho, ExperimentConfig};
use crate::covariance::{dyadic_rho_variation_sweep, rho_variation_bound, verify_decomposition, TfbmKernel};
use crate::error::Result;
use crate::params::{ModelParams, Partition};

/// Decomposition check of one `(H, lambda)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceCell {
    pub hurst: f64,
    pub lambda: f64,
    pub pairs: usize,
    pub violations: usize,
    pub max_gap: f64,
    pub min_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoRow {
    pub hurst: f64,
    pub lambda: f64,
    pub rho: f64,
    pub depth: u32,
    pub value: f64,
    pub running_max: f64,
    pub bound: f64,
}

fn sweep_cell(h: f64, l: f64, horizon: f64, max_depth: u32) -> Result<Vec<RhoRow>> {
    let params = ModelParams::new(h, l, 1, horizon)?;
    let rho = sweep_rho(h);
    let bound = rho_variation_bound(&params, rho, max_depth)?.total;
    Ok(dyadic_rho_variation_sweep(&TfbmKernel::new(&params), horizon, rho, max_depth)?
        .into_iter()
        .map(|r| RhoRow { hurst: h, lambda: l, rho, depth: r.depth, value: r.value, running_max: r.running_max, bound })
        .collect())
}

fn write_sweep(config: &ExperimentConfig, name: &str, rows: &[RhoRow]) -> Result<()> {
    let mut w = create_csv(config, name)?;
    writeln!(w, "H,lambda,rho,depth,value,running_max,bound")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6},{},{:.10e},{:.10e},{:.10e}",
            r.hurst, r.lambda, r.rho, r.depth, r.value, r.running_max, r.bound
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceCheckReport {
    pub cells: Vec<CovarianceCell>,
    pub sweep: Vec<RhoRow>,
}

impl CovarianceCheckReport {
    pub fn total_violations(&self) -> usize {
        self.cells.iter().map(|c| c.violations).sum()
    }

    /// Whether every sweep value stays below its assembled bound.
    pub fn sweep_bounded(&self) -> bool {
        self.sweep.iter().all(|r| r.value <= r.bound)
    }

    pub fn passed(&self) -> bool {
        self.total_violations() == 0 && self.sweep_bounded()
    }
}

impl fmt::Display for CovarianceCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "covariance-check: decomposition bound violations")?;
        for c in &self.cells {
            writeln!(
                f,
                "  H={:<4} lambda={:<5} violations {:>5}/{} max gap {:.3e} min slack {:+.3e}",
                c.hurst, c.lambda, c.violations, c.pairs, c.max_gap, c.min_slack
            )?;
        }
        writeln!(f, "  total violations: {}", self.total_violations())?;
        writeln!(f, "  rho-variation sweep below bound: {}", self.sweep_bounded())
    }
}

/// Writes `covariance_check.csv` (`H,lambda,pairs,violations,max_gap,min_slack`)
/// on a `steps + 1` point grid and `covariance_rho.csv` with dyadic
/// rho-variation sweeps at `rho = max(1, 1/(2H))`.
pub fn run_covariance_check(config: &ExperimentConfig) -> Result<CovarianceCheckReport> {
    config.validate()?;
    let grid = Partition::uniform(config.horizon, config.steps)?;
    let list = cells(config);
    let cells: Vec<CovarianceCell> = list
        .par_iter()
        .map(|c| {
            let (h, l) = (c.hurst, c.lambda);
            let params = ModelParams::new(h, l, 1, config.horizon)?;
            let r = verify_decomposition(&params, &grid);
            Ok(CovarianceCell {
                hurst: h,
                lambda: l,
                pairs: r.pairs,
                violations: r.violations.len(),
                max_gap: r.max_gap,
                min_slack: r.min_slack,
            })
        })
        .collect::<Result<_>>()?;
    let sweep: Vec<Vec<RhoRow>> = list
        .par_iter()
        .map(|c| sweep_cell(c.hurst, c.lambda, config.horizon, config.max_depth))
        .collect::<Result<_>>()?;
    let sweep = sweep.concat();

    let mut w = create_csv(config, "covariance_check.csv")?;
    writeln!(w, "H,lambda,pairs,violations,max_gap,min_slack")?;
    for c in &cells {
        writeln!(w, "{},{},{},{},{:.10e},{:.10e}", c.hurst, c.lambda, c.pairs, c.violations, c.max_gap, c.min_slack)?;
    }
    w.flush()?;
    write_sweep(config, "covariance_rho.csv", &sweep)?;
    Ok(CovarianceCheckReport { cells, sweep })
}

/// Stabilisation of one dyadic sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoVariationSummary {
    pub hurst: f64,
    pub lambda: f64,
    pub rho: f64,
    /// `(v_D - v_{D-1}) / v_{D-1}` for the two deepest levels.
    pub relative_growth: f64,
    pub bound: f64,
    pub below_bound: bool,
}

impl RhoVariationSummary {
    pub const GROWTH_TOLERANCE: f64 = 0.02;

    pub fn stabilised(&self) -> bool {
        self.relative_growth.abs() < Self::GROWTH_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoVariationReport {
    pub rows: Vec<RhoRow>,
    pub summaries: Vec<RhoVariationSummary>,
}

impl RhoVariationReport {
    pub fn passed(&self) -> bool {
        self.summaries.iter().all(|s| s.stabilised() && s.below_bound)
    }
}

impl fmt::Display for RhoVariationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rho-variation: growth between the two deepest dyadic levels")?;
        for s in &self.summaries {
            writeln!(
                f,
                "  H={:<4} lambda={:<5} rho={:.3} growth {:+.3}% bound {:.3} [{}]",
                s.hurst,
                s.lambda,
                s.rho,
                100.0 * s.relative_growth,
                s.bound,
                if s.stabilised() && s.below_bound { "ok" } else { "off" }
            )?;
        }
        Ok(())
    }
}

/// Writes `rho_variation.csv` (`H,lambda,rho,depth,value,running_max,bound`).
pub fn run_rho_variation(config: &ExperimentConfig) -> Result<RhoVariationReport> {
    config.validate()?;
    let per_cell: Vec<Vec<RhoRow>> = cells(config)
        .into_par_iter()
        .map(|c| sweep_cell(c.hurst, c.lambda, config.horizon, config.max_depth))
        .collect::<Result<_>>()?;
    let summaries = per_cell
        .iter()
        .map(|rows| {
            let last = rows[rows.len() - 1];
            let growth = if rows.len() >= 2 {
                let prev = rows[rows.len() - 2].value;
                (last.value - prev) / prev
            } else {
                f64::NAN
            };
            RhoVariationSummary {
                hurst: last.hurst,
                lambda: last.lambda,
                rho: last.rho,
                relative_growth: growth,
                bound: last.bound,
                below_bound: rows.iter().all(|r| r.value <= r.bound),
            }
        })
        .collect();
    let rows = per_cell.concat();
    write_sweep(config, "rho_variation.csv", &rows)?;
    Ok(RhoVariationReport { rows, summaries })
}
