use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    LevyConvergence,
    MilsteinConvergence,
    SignatureFeatures,
    CovarianceCheck,
    RhoVariation,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Simulate,
        Experiment::LevyConvergence,
        Experiment::MilsteinConvergence,
        Experiment::SignatureFeatures,
        Experiment::CovarianceCheck,
        Experiment::RhoVariation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::LevyConvergence => "levy-convergence",
            Experiment::MilsteinConvergence => "milstein-convergence",
            Experiment::SignatureFeatures => "signature-features",
            Experiment::CovarianceCheck => "covariance-check",
            Experiment::RhoVariation => "rho-variation",
        }
    }

    /// Whether the experiment builds level-2 lifts and so needs `H > 1/4`.
    pub fn needs_lift(self) -> bool {
        matches!(self, Experiment::LevyConvergence | Experiment::MilsteinConvergence | Experiment::SignatureFeatures)
    }

    fn uses_ladder(self) -> bool {
        matches!(self, Experiment::LevyConvergence | Experiment::MilsteinConvergence)
    }
}

/// Partial configuration, as read from a TOML file or collected from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<Experiment>,
    pub hurst: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    pub dim: Option<usize>,
    pub resolutions: Option<Vec<usize>>,
    pub steps: Option<usize>,
    pub n_mc: Option<usize>,
    pub depth: Option<usize>,
    pub max_depth: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub fast: Option<bool>,
}

impl ConfigOverrides {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(self, other: Self) -> Self {
        Self {
            experiment: other.experiment.or(self.experiment),
            hurst: other.hurst.or(self.hurst),
            lambda: other.lambda.or(self.lambda),
            horizon: other.horizon.or(self.horizon),
            dim: other.dim.or(self.dim),
            resolutions: other.resolutions.or(self.resolutions),
            steps: other.steps.or(self.steps),
            n_mc: other.n_mc.or(self.n_mc),
            depth: other.depth.or(self.depth),
            max_depth: other.max_depth.or(self.max_depth),
            seed: other.seed.or(self.seed),
            out: other.out.or(self.out),
            fast: other.fast.or(self.fast),
        }
    }
}

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const FAST_N_MC: usize = 200;
/// Added to every slope tolerance in fast mode.
pub const FAST_TOLERANCE_BONUS: f64 = 0.05;

/// Fully resolved settings for one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub hurst: Vec<f64>,
    pub lambda: Vec<f64>,
    pub horizon: f64,
    pub dim: usize,
    /// Nested grid sizes for convergence experiments.
    pub resolutions: Vec<usize>,
    /// Single grid size: simulation and signature grids, covariance-check intervals.
    pub steps: usize,
    pub n_mc: usize,
    /// Signature truncation level.
    pub depth: usize,
    /// Deepest dyadic level of rho-variation sweeps.
    pub max_depth: u32,
    pub seed: u64,
    pub out: PathBuf,
    pub fast: bool,
}

fn ladder(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            hurst: vec![0.4],
            lambda: vec![1.0],
            horizon: 1.0,
            dim: 1,
            resolutions: Vec::new(),
            steps: 1024,
            n_mc: 1000,
            depth: 5,
            max_depth: 10,
            seed: DEFAULT_SEED,
            out: PathBuf::from("results"),
            fast: false,
        };
        match experiment {
            Experiment::Simulate => Self { n_mc: 1, ..base },
            Experiment::LevyConvergence => Self {
                hurst: vec![0.3, 0.4, 0.6],
                lambda: vec![0.1, 1.0, 10.0],
                dim: 2,
                resolutions: ladder(6, 12),
                ..base
            },
            Experiment::MilsteinConvergence => {
                Self { hurst: vec![0.3, 0.4, 0.6, 0.7], resolutions: ladder(4, 10), ..base }
            }
            Experiment::SignatureFeatures => Self { hurst: vec![0.3, 0.5, 0.7], n_mc: 500, ..base },
            Experiment::CovarianceCheck => {
                Self { hurst: vec![0.3, 0.4, 0.6, 0.7], lambda: vec![0.1, 1.0, 10.0], steps: 63, max_depth: 8, ..base }
            }
            Experiment::RhoVariation => Self { hurst: vec![0.3, 0.5, 0.7], ..base },
        }
    }

    /// Defaults for `experiment`, then `file`, then `flags`. `steps` without
    /// explicit `resolutions` extends or truncates the default ladder so it
    /// ends at `steps`. Fast mode lowers `n_mc` unless it was set explicitly.
    pub fn resolve(experiment: Experiment, file: Option<ConfigOverrides>, flags: ConfigOverrides) -> Result<Self> {
        let o = file.unwrap_or_default().merge(flags);
        if let Some(e) = o.experiment {
            if e != experiment {
                return Err(Error::Config(format!(
                    "config file is for '{}' but '{}' was requested",
                    e.name(),
                    experiment.name()
                )));
            }
        }
        let mut c = Self::defaults(experiment);
        let fast = o.fast.unwrap_or(false);
        if let Some(steps) = o.steps {
            c.steps = steps;
            if experiment.uses_ladder() && o.resolutions.is_none() {
                let lo = c.resolutions[0];
                c.resolutions = std::iter::successors(Some(lo), |n| Some(n * 2)).take_while(|n| *n <= steps).collect();
            }
        }
        c.hurst = o.hurst.unwrap_or(c.hurst);
        c.lambda = o.lambda.unwrap_or(c.lambda);
        c.horizon = o.horizon.unwrap_or(c.horizon);
        c.dim = o.dim.unwrap_or(c.dim);
        c.resolutions = o.resolutions.unwrap_or(c.resolutions);
        c.n_mc = o.n_mc.unwrap_or(if fast { FAST_N_MC.min(c.n_mc) } else { c.n_mc });
        c.depth = o.depth.unwrap_or(c.depth);
        c.max_depth = o.max_depth.unwrap_or(c.max_depth);
        c.seed = o.seed.unwrap_or(c.seed);
        c.out = o.out.unwrap_or(c.out);
        c.fast = fast;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.hurst.is_empty() || self.lambda.is_empty() {
            return bad("hurst and lambda lists must be nonempty".into());
        }
        for &h in &self.hurst {
            if !(h > 0.0 && h < 1.0) {
                return bad(format!("hurst {h} outside (0, 1)"));
            }
            if self.experiment.needs_lift() && h <= 0.25 {
                return bad(format!("{} needs hurst > 1/4, got {h}", self.experiment.name()));
            }
        }
        if self.lambda.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return bad("lambda values must be positive".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if self.steps == 0 {
            return bad("steps must be positive".into());
        }
        if self.experiment.uses_ladder() {
            let r = &self.resolutions;
            if r.len() < 4 {
                return bad(format!("a slope fit needs at least 4 resolutions, got {}", r.len()));
            }
            if r.windows(2).any(|w| w[1] <= w[0]) {
                return bad("resolutions must be strictly increasing".into());
            }
            if r.iter().any(|n| !n.is_power_of_two()) {
                return bad("resolutions must be powers of two".into());
            }
        }
        if self.n_mc < 1 || (self.experiment != Experiment::Simulate && self.n_mc < 2) {
            return bad(format!("n_mc too small: {}", self.n_mc));
        }
        match self.experiment {
            Experiment::SignatureFeatures => {
                if self.dim != 1 {
                    return bad("signature-features uses one-dimensional paths".into());
                }
                if !(2..=crate::roughpath::MAX_SIGNATURE_DEPTH).contains(&self.depth) {
                    return bad(format!("depth must lie in 2..=8, got {}", self.depth));
                }
            }
            Experiment::MilsteinConvergence if self.dim != 1 => {
                return bad("milstein-convergence solves the scalar linear equation; dim must be 1".into());
            }
            Experiment::LevyConvergence if self.dim < 2 => {
                return bad("levy-convergence needs dim >= 2".into());
            }
            Experiment::CovarianceCheck | Experiment::RhoVariation if !(1..=14).contains(&self.max_depth) => {
                return bad(format!("max_depth must lie in 1..=14, got {}", self.max_depth));
            }
            _ => {}
        }
        Ok(())
    }

    /// Added to slope tolerances.
    pub fn tolerance_bonus(&self) -> f64 {
        if self.fast {
            FAST_TOLERANCE_BONUS
        } else {
            0.0
        }
    }

    /// The configuration as TOML, each line prefixed with `# `.
    pub fn echo(&self) -> String {
        let text = toml::to_string(self).unwrap_or_default();
        text.lines().map(|l| format!("# {l}\n")).collect()
    }
}
