//! Truncated signatures of piecewise-linear paths.

use std::io::Write;

use rayon::prelude::*;

use super::RoughPathLift;
use crate::error::{domain, Result};
use crate::params::ModelParams;
use crate::simulate::{simulate_paths, RngSpec, SamplePath};
use crate::special::gamma;
use crate::stats::{loglog_fit, rms_with_se};

pub const MAX_SIGNATURE_DEPTH: usize = 8;

/// Levels `0..=depth` of a tensor-algebra element; level `k` is a row-major
/// `dim^k` array indexed by words `(i_1, ..., i_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSignature {
    dim: usize,
    levels: Vec<Vec<f64>>,
}

impl TruncatedSignature {
    /// The unit `(1, 0, 0, ...)`.
    pub fn identity(dim: usize, depth: usize) -> Self {
        let levels = (0..=depth)
            .map(|k| {
                let mut v = vec![0.0; dim.pow(k as u32)];
                if k == 0 {
                    v[0] = 1.0;
                }
                v
            })
            .collect();
        Self { dim, levels }
    }

    /// `exp(dx)`: level `k` is `dx^{(x) k} / k!`.
    pub fn segment(dx: &[f64], depth: usize) -> Self {
        let mut out = Self::identity(dx.len(), depth);
        for k in 1..=depth {
            let (lo, hi) = out.levels.split_at_mut(k);
            tensor_scaled(&lo[k - 1], dx, 1.0 / k as f64, &mut hi[0]);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    /// Coefficient of the word `w`.
    pub fn entry(&self, word: &[usize]) -> f64 {
        let idx = word.iter().fold(0, |acc, &i| acc * self.dim + i);
        self.levels[word.len()][idx]
    }

    /// Frobenius norm of level `k`.
    pub fn level_norm(&self, k: usize) -> f64 {
        self.levels[k].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Truncated tensor product `self (x) other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let depth = self.depth().min(other.depth());
        let mut out = Self::identity(self.dim, depth);
        for n in 0..=depth {
            let target = &mut out.levels[n];
            target.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..=n {
                let a = &self.levels[i];
                let b = &other.levels[n - i];
                for (p, &x) in a.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let row = &mut target[p * b.len()..(p + 1) * b.len()];
                    row.iter_mut().zip(b).for_each(|(t, &y)| *t += x * y);
                }
            }
        }
        out
    }

    /// In-place `self <- self (x) exp(dx)` by Horner's scheme, top level first.
    pub fn extend_linear(&mut self, dx: &[f64]) {
        assert_eq!(dx.len(), self.dim);
        let depth = self.depth();
        let mut acc = Vec::new();
        let mut next = Vec::new();
        for n in (1..=depth).rev() {
            acc.clear();
            acc.push(1.0);
            for j in 1..=n {
                tensor_scaled(&acc, dx, 1.0 / (n - j + 1) as f64, &mut next);
                next.iter_mut().zip(&self.levels[j]).for_each(|(a, &s)| *a += s);
                std::mem::swap(&mut acc, &mut next);
            }
            self.levels[n].copy_from_slice(&acc);
        }
    }

    /// One row per coefficient: `level,word,value`, the word written as
    /// colon-separated letters (empty for level 0).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "level,word,value")?;
        for (k, level) in self.levels.iter().enumerate() {
            for (idx, v) in level.iter().enumerate() {
                let mut word = vec![0; k];
                let mut rest = idx;
                for slot in word.iter_mut().rev() {
                    *slot = rest % self.dim;
                    rest /= self.dim;
                }
                let w: Vec<String> = word.iter().map(|i| i.to_string()).collect();
                writeln!(out, "{k},{},{v:.17e}", w.join(":"))?;
            }
        }
        Ok(())
    }

    /// Levels `1..=depth` concatenated.
    pub fn features(&self) -> Vec<f64> {
        self.levels[1..].concat()
    }
}

/// `out = a (x) v * scale` for a flat tensor `a` and vector `v`.
fn tensor_scaled(a: &[f64], v: &[f64], scale: f64, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(a.len() * v.len());
    for &x in a {
        out.extend(v.iter().map(|&y| x * y * scale));
    }
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 || depth > MAX_SIGNATURE_DEPTH {
        return domain(format!("signature depth must lie in 1..={MAX_SIGNATURE_DEPTH}, got {depth}"));
    }
    Ok(())
}

/// Signature of the piecewise-linear path up to level `depth`.
pub fn signature_of_path(path: &SamplePath, depth: usize) -> Result<TruncatedSignature> {
    check_depth(depth)?;
    let mut sig = TruncatedSignature::identity(path.dim(), depth);
    for k in 0..path.len() - 1 {
        sig.extend_linear(&path.increment(k, k + 1));
    }
    Ok(sig)
}

/// Signature over the whole horizon of a lifted path.
pub fn signature_truncated(lift: &RoughPathLift, depth: usize) -> Result<TruncatedSignature> {
    signature_of_path(lift.path(), depth)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelMoment {
    pub level: usize,
    /// `E[|S^k|^2]^{1/2}` estimate.
    pub rms: f64,
    pub stderr: f64,
    /// `rms * Gamma(k/2 + 1) / T^{kH}`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorialDecayReport {
    pub levels: Vec<LevelMoment>,
    /// Smallest `C` with `normalized_k <= C^k` for every level.
    pub fitted_constant: f64,
    /// `rms_k / rms_{k-1}` for `k >= 2`.
    pub ratios: Vec<f64>,
    pub n_mc: usize,
}

impl FactorialDecayReport {
    /// Whether `rms_k / rms_{k-1}` decreases strictly for `k >= from`.
    pub fn ratios_decreasing_from(&self, from: usize) -> bool {
        let r: Vec<f64> = self.ratios.iter().skip(from.saturating_sub(2)).copied().collect();
        r.windows(2).all(|w| w[1] < w[0])
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "level,rms,stderr,normalized")?;
        for m in &self.levels {
            writeln!(out, "{},{:.10e},{:.10e},{:.10e}", m.level, m.rms, m.stderr, m.normalized)?;
        }
        writeln!(out, "# fitted_constant={:.10e}", self.fitted_constant)?;
        Ok(())
    }
}

fn level_sq_norms(
    params: &ModelParams,
    depth: usize,
    n_steps: usize,
    n_mc: usize,
    rng: RngSpec,
) -> Result<Vec<Vec<f64>>> {
    let sim = simulate_paths(params, n_steps, n_mc, rng)?;
    sim.paths
        .par_iter()
        .map(|p| {
            let s = signature_of_path(p, depth)?;
            Ok((1..=depth).map(|k| s.level_norm(k).powi(2)).collect())
        })
        .collect()
}

/// Monte Carlo moments of signature levels `1..=depth` against the
/// factorial-decay envelope `C^k T^{kH} / Gamma(k/2 + 1)`.
pub fn factorial_decay_check(
    params: &ModelParams,
    depth: usize,
    n_steps: usize,
    n_mc: usize,
    rng: RngSpec,
) -> Result<FactorialDecayReport> {
    params.require_liftable()?;
    if depth == 0 || depth > 6 {
        return domain(format!("factorial decay check supports depth 1..=6, got {depth}"));
    }
    if n_mc < 2 {
        return domain("n_mc must be at least 2");
    }
    let sq = level_sq_norms(params, depth, n_steps, n_mc, rng)?;
    let h = params.hurst;
    let t = params.horizon;
    let levels: Vec<LevelMoment> = (1..=depth)
        .map(|k| {
            let col: Vec<f64> = sq.iter().map(|r| r[k - 1]).collect();
            let (rms, stderr) = rms_with_se(&col);
            let normalized = rms * gamma(k as f64 / 2.0 + 1.0) / t.powf(k as f64 * h);
            LevelMoment { level: k, rms, stderr, normalized }
        })
        .collect();
    let fitted_constant = levels.iter().map(|m| m.normalized.powf(1.0 / m.level as f64)).fold(0.0, f64::max);
    let ratios = levels.windows(2).map(|w| w[1].rms / w[0].rms).collect();
    Ok(FactorialDecayReport { levels, fitted_constant, ratios, n_mc })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub level: usize,
    /// Fitted exponent of `rms_k(T)` in `T`.
    pub exponent: f64,
    pub stderr: f64,
    /// `k H`.
    pub expected: f64,
}

/// Fit `rms_k(T) ~ T^{e_k}` across `horizons` for each requested level. Every
/// horizon reuses the same random stream so the fits share their noise.
pub fn level_moment_scaling(
    params: &ModelParams,
    levels: &[usize],
    horizons: &[f64],
    n_steps: usize,
    n_mc: usize,
    rng: RngSpec,
) -> Result<Vec<ScalingFit>> {
    params.require_liftable()?;
    let depth = levels.iter().copied().max().unwrap_or(0);
    check_depth(depth)?;
    if levels.contains(&0) {
        return domain("levels start at 1");
    }
    let mut rms = vec![Vec::with_capacity(horizons.len()); depth];
    for &t in horizons {
        let p = params.with_horizon(t)?;
        let sq = level_sq_norms(&p, depth, n_steps, n_mc, rng)?;
        for k in 1..=depth {
            let col: Vec<f64> = sq.iter().map(|r| r[k - 1]).collect();
            rms[k - 1].push(rms_with_se(&col).0);
        }
    }
    levels
        .iter()
        .map(|&k| {
            let fit = loglog_fit(horizons, &rms[k - 1])?;
            Ok(ScalingFit {
                level: k,
                exponent: fit.slope,
                stderr: fit.slope_stderr,
                expected: k as f64 * params.hurst,
            })
        })
        .collect()
}
