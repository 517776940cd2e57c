//! Model parameters and time grids.

use crate::error::{domain, Result};

/// Parameters of a `dim`-dimensional tempered fractional Brownian motion on `[0, horizon]`.
///
/// Components are independent copies of the scalar process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub hurst: f64,
    pub lambda: f64,
    pub dim: usize,
    pub horizon: f64,
}

impl ModelParams {
    pub fn new(hurst: f64, lambda: f64, dim: usize, horizon: f64) -> Result<Self> {
        let p = Self { hurst, lambda, dim, horizon };
        p.validate()?;
        Ok(p)
    }

    /// Scalar process on `[0, 1]`.
    pub fn scalar(hurst: f64, lambda: f64) -> Result<Self> {
        Self::new(hurst, lambda, 1, 1.0)
    }

    pub fn with_dim(self, dim: usize) -> Result<Self> {
        Self::new(self.hurst, self.lambda, dim, self.horizon)
    }

    pub fn with_horizon(self, horizon: f64) -> Result<Self> {
        Self::new(self.hurst, self.lambda, self.dim, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return domain(format!("hurst must lie in (0,1), got {}", self.hurst));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return domain(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return domain(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.dim == 0 {
            return domain("dim must be at least 1");
        }
        Ok(())
    }

    /// The level-2 lift only exists for `hurst > 1/4`.
    pub fn require_liftable(&self) -> Result<()> {
        if self.hurst <= 0.25 {
            return domain(format!("rough-path lift requires hurst > 1/4, got {}", self.hurst));
        }
        Ok(())
    }
}

/// Strictly increasing time grid `0 = t_0 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    times: Vec<f64>,
    mesh: f64,
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return domain("a partition needs at least two points");
        }
        if times[0] != 0.0 {
            return domain(format!("partition must start at 0, got {}", times[0]));
        }
        let mut mesh = 0.0_f64;
        for w in times.windows(2) {
            let gap = w[1] - w[0];
            if gap.is_nan() || gap <= 0.0 || !w[1].is_finite() {
                return domain("partition times must be finite and strictly increasing");
            }
            mesh = mesh.max(gap);
        }
        Ok(Self { times, mesh })
    }

    /// `n` equal intervals on `[0, horizon]`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return domain("uniform partition needs n >= 1");
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        let step = horizon / n as f64;
        let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
        times[n] = horizon;
        Self::new(times)
    }

    /// Uniform partition with `2^depth` intervals.
    pub fn dyadic(horizon: f64, depth: u32) -> Result<Self> {
        Self::uniform(horizon, 1usize << depth)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Keep every `factor`-th point. `factor` must divide the number of intervals.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.intervals().is_multiple_of(factor) {
            return domain(format!("coarsening factor {factor} does not divide {} intervals", self.intervals()));
        }
        Self::new(self.times.iter().step_by(factor).copied().collect())
    }

    pub fn is_uniform(&self, rel_tol: f64) -> bool {
        let step = self.horizon() / self.intervals() as f64;
        self.times.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= rel_tol * step)
    }
}
