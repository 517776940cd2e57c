use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use super::{cells, create_csv, ExperimentConfig};
use crate::covariance::variance;
use crate::error::Result;
use crate::params::ModelParams;
use crate::roughpath::{factorial_decay_check, signature_of_path, FactorialDecayReport, TruncatedSignature};
use crate::simulate::simulate_paths;
use crate::stats::{mean_with_se, sample_variance};

/// Monte Carlo summary of `(S1, S2)` for one `(H, lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureGroup {
    pub hurst: f64,
    pub lambda: f64,
    pub n: usize,
    pub mean_s1: f64,
    pub mean_s1_stderr: f64,
    pub mean_s2: f64,
    pub var_s1: f64,
    /// `var_s1 * sqrt(2 / (n - 1))`, the Gaussian standard error of a sample variance.
    pub var_s1_stderr: f64,
    pub cov_s1_s2: f64,
    pub var_s2: f64,
    /// Exact variance of `B(T)`.
    pub analytic_var_s1: f64,
    /// Largest `|S2 - S1^2 / 2|` over the group.
    pub identity_residual: f64,
    pub decay: Option<FactorialDecayReport>,
}

impl SignatureGroup {
    pub fn mean_ok(&self) -> bool {
        self.mean_s1.abs() <= 4.0 * self.mean_s1_stderr
    }

    pub fn variance_ok(&self) -> bool {
        (self.var_s1 - self.analytic_var_s1).abs() <= 4.0 * self.var_s1_stderr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignatureFeaturesReport {
    pub groups: Vec<SignatureGroup>,
}

impl SignatureFeaturesReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.mean_ok() && g.variance_ok() && g.identity_residual < 1e-12)
    }
}

impl fmt::Display for SignatureFeaturesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "signature-features: (S1, S2) moments per group")?;
        for g in &self.groups {
            writeln!(
                f,
                "  H={:<4} lambda={:<5} mean S1 {:+.4} (se {:.4}) var S1 {:.4} vs {:.4} (se {:.4}) max|S2-S1^2/2| {:.1e}",
                g.hurst, g.lambda, g.mean_s1, g.mean_s1_stderr, g.var_s1, g.analytic_var_s1, g.var_s1_stderr,
                g.identity_residual
            )?;
            if let Some(d) = &g.decay {
                let ratios: Vec<String> = d.ratios.iter().map(|r| format!("{r:.3}")).collect();
                writeln!(f, "    level ratios [{}], fitted constant {:.3}", ratios.join(", "), d.fitted_constant)?;
            }
        }
        Ok(())
    }
}

fn word_labels(dim: usize, depth: usize) -> Vec<String> {
    let mut out = Vec::new();
    for k in 1..=depth {
        for idx in 0..dim.pow(k as u32) {
            let mut word = vec![0; k];
            let mut rest = idx;
            for slot in word.iter_mut().rev() {
                *slot = rest % dim;
                rest /= dim;
            }
            let letters: Vec<String> = word.iter().map(|i| i.to_string()).collect();
            out.push(format!("{k}:{}", letters.join(":")));
        }
    }
    out
}

/// Writes `signature_features.csv` (`H,lambda,path_id,S1,S2`),
/// `signature_moments.csv` (per-group means and covariances),
/// `signature_levels.csv` (one row per path, one `level:index...` column per
/// coefficient up to `depth`) and `signature_decay.csv` (level moments).
pub fn run_signature_features(config: &ExperimentConfig) -> Result<SignatureFeaturesReport> {
    config.validate()?;
    let per_cell: Vec<(SignatureGroup, Vec<TruncatedSignature>)> = cells(config)
        .into_par_iter()
        .map(|c| {
            let (h, l, rng) = (c.hurst, c.lambda, c.rng);
            let params = ModelParams::new(h, l, 1, config.horizon)?;
            let sim = simulate_paths(&params, config.steps, config.n_mc, rng)?;
            let sigs: Vec<TruncatedSignature> =
                sim.paths.par_iter().map(|p| signature_of_path(p, config.depth)).collect::<Result<_>>()?;
            let s1: Vec<f64> = sigs.iter().map(|s| s.level(1)[0]).collect();
            let s2: Vec<f64> = sigs.iter().map(|s| s.level(2)[0]).collect();
            let n = s1.len();
            let (mean_s1, mean_s1_stderr) = mean_with_se(&s1);
            let mean_s2 = s2.iter().sum::<f64>() / n as f64;
            let var_s1 = sample_variance(&s1);
            let var_s2 = sample_variance(&s2);
            let cov_s1_s2 =
                s1.iter().zip(&s2).map(|(a, b)| (a - mean_s1) * (b - mean_s2)).sum::<f64>() / (n as f64 - 1.0);
            let identity_residual = s1.iter().zip(&s2).map(|(a, b)| (b - 0.5 * a * a).abs()).fold(0.0, f64::max);
            let decay = if config.depth <= 6 {
                Some(factorial_decay_check(&params, config.depth, config.steps, config.n_mc, rng)?)
            } else {
                None
            };
            let group = SignatureGroup {
                hurst: h,
                lambda: l,
                n,
                mean_s1,
                mean_s1_stderr,
                mean_s2,
                var_s1,
                var_s1_stderr: var_s1 * (2.0 / (n as f64 - 1.0)).sqrt(),
                cov_s1_s2,
                var_s2,
                analytic_var_s1: variance(&params, config.horizon)?,
                identity_residual,
                decay,
            };
            Ok((group, sigs))
        })
        .collect::<Result<_>>()?;

    let mut feats = create_csv(config, "signature_features.csv")?;
    writeln!(feats, "H,lambda,path_id,S1,S2")?;
    let mut levels = create_csv(config, "signature_levels.csv")?;
    writeln!(levels, "H,lambda,path_id,{}", word_labels(1, config.depth).join(","))?;
    for (g, sigs) in &per_cell {
        for (p, s) in sigs.iter().enumerate() {
            writeln!(feats, "{},{},{p},{:.10e},{:.10e}", g.hurst, g.lambda, s.level(1)[0], s.level(2)[0])?;
            let vals: Vec<String> = s.features().iter().map(|v| format!("{v:.10e}")).collect();
            writeln!(levels, "{},{},{p},{}", g.hurst, g.lambda, vals.join(","))?;
        }
    }
    feats.flush()?;
    levels.flush()?;

    let mut mom = create_csv(config, "signature_moments.csv")?;
    writeln!(mom, "H,lambda,n,mean_S1,mean_S2,cov_S1S1,cov_S1S2,cov_S2S2,analytic_var_S1")?;
    let mut dec = create_csv(config, "signature_decay.csv")?;
    writeln!(dec, "H,lambda,level,rms,stderr,normalized")?;
    for (g, _) in &per_cell {
        writeln!(
            mom,
            "{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            g.hurst, g.lambda, g.n, g.mean_s1, g.mean_s2, g.var_s1, g.cov_s1_s2, g.var_s2, g.analytic_var_s1
        )?;
        if let Some(d) = &g.decay {
            for m in &d.levels {
                writeln!(
                    dec,
                    "{},{},{},{:.10e},{:.10e},{:.10e}",
                    g.hurst, g.lambda, m.level, m.rms, m.stderr, m.normalized
                )?;
            }
        }
    }
    mom.flush()?;
    dec.flush()?;
    Ok(SignatureFeaturesReport { groups: per_cell.into_iter().map(|(g, _)| g).collect() })
}
