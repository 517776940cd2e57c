//! Level-2 lift of a sampled path and its truncated signature.
//!
//! The lift is the canonical one of the piecewise-linear interpolation:
//! on each grid interval `B(t_k, t_{k+1}) = dX_k (x) dX_k / 2`, and longer
//! spans follow from Chen's relation
//! `B(s,t) = B(s,u) + B(u,t) + X(s,u) (x) X(u,t)`.
//!
//! Only the prefixes `B(t_0, t_j)` are stored. Spans starting elsewhere are
//! accumulated on demand, which keeps memory linear in the grid size.

mod signature;

pub use signature::{
    factorial_decay_check, level_moment_scaling, signature_of_path, signature_truncated, FactorialDecayReport,
    LevelMoment, ScalingFit, TruncatedSignature, MAX_SIGNATURE_DEPTH,
};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::params::ModelParams;
use crate::simulate::{simulate_paths, RngSpec, SamplePath};
use crate::stats::rms_with_se;

/// A sampled path together with its level-2 iterated integrals.
#[derive(Debug, Clone)]
pub struct RoughPathLift {
    path: SamplePath,
    /// Row-major `dim x dim` blocks holding `B(t_0, t_j)` for every `j`.
    prefix: Vec<f64>,
}

/// Build the piecewise-linear lift of `path`.
pub fn lift_piecewise_linear(path: &SamplePath) -> Result<RoughPathLift> {
    if path.len() < 2 {
        return domain("a lift needs at least two grid points");
    }
    let d = path.dim();
    let n = path.len();
    let mut prefix = vec![0.0; n * d * d];
    let x0 = path.point(0);
    for k in 0..n - 1 {
        let (done, rest) = prefix.split_at_mut((k + 1) * d * d);
        let prev = &done[k * d * d..];
        let next = &mut rest[..d * d];
        let xk = path.point(k);
        let xk1 = path.point(k + 1);
        for a in 0..d {
            let da = xk1[a] - xk[a];
            let ya = xk[a] - x0[a];
            for b in 0..d {
                let db = xk1[b] - xk[b];
                next[a * d + b] = prev[a * d + b] + 0.5 * da * db + ya * db;
            }
        }
    }
    Ok(RoughPathLift { path: path.clone(), prefix })
}

impl RoughPathLift {
    pub fn path(&self) -> &SamplePath {
        &self.path
    }

    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_span(&self, i: usize, j: usize) -> Result<()> {
        if i > j || j >= self.len() {
            return domain(format!("invalid span ({i}, {j}) on {} points", self.len()));
        }
        Ok(())
    }

    /// Level-1 increment `X(t_j) - X(t_i)`.
    pub fn increment(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        self.check_span(i, j)?;
        Ok(self.path.increment(i, j))
    }

    /// `B(t_0, t_j)` straight from storage.
    pub fn prefix(&self, j: usize) -> Result<DMatrix<f64>> {
        self.check_span(0, j)?;
        let d = self.dim();
        Ok(DMatrix::from_row_slice(d, d, &self.prefix[j * d * d..(j + 1) * d * d]))
    }

    /// Tensor of the single interval `[t_k, t_{k+1}]`: `dX_k (x) dX_k / 2`.
    pub fn adjacent(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check_span(k, k + 1)?;
        let dx = nalgebra::DVector::from_vec(self.path.increment(k, k + 1));
        Ok(0.5 * &dx * dx.transpose())
    }

    /// `B(t_i, t_j)`, accumulated interval by interval from `t_i`.
    pub fn level2(&self, i: usize, j: usize) -> Result<DMatrix<f64>> {
        self.check_span(i, j)?;
        if i == 0 {
            return self.prefix(j);
        }
        let d = self.dim();
        let xi = self.path.point(i);
        let mut out = DMatrix::zeros(d, d);
        for k in i..j {
            let xk = self.path.point(k);
            let xk1 = self.path.point(k + 1);
            for a in 0..d {
                let da = xk1[a] - xk[a];
                let ya = xk[a] - xi[a];
                for b in 0..d {
                    let db = xk1[b] - xk[b];
                    out[(a, b)] += 0.5 * da * db + ya * db;
                }
            }
        }
        Ok(out)
    }

    /// `B(t_i, t_j)` from the stored prefixes by one Chen step:
    /// `B(0,j) - B(0,i) - X(0,i) (x) X(i,j)`. Constant cost, but loses relative
    /// accuracy on short spans far from the origin.
    pub fn level2_from_prefix(&self, i: usize, j: usize) -> Result<DMatrix<f64>> {
        self.check_span(i, j)?;
        let x0i = nalgebra::DVector::from_vec(self.path.increment(0, i));
        let xij = nalgebra::DVector::from_vec(self.path.increment(i, j));
        Ok(self.prefix(j)? - self.prefix(i)? - x0i * xij.transpose())
    }

    /// Antisymmetric part of `B(t_i, t_j)`: the Levy area.
    pub fn levy_area(&self, i: usize, j: usize) -> Result<DMatrix<f64>> {
        let b = self.level2(i, j)?;
        Ok(0.5 * (&b - b.transpose()))
    }

    /// Materialise `B(t_i, t_j)` for all `i <= j`, row by row. Quadratic memory.
    pub fn level2_table(&self) -> Level2Table {
        let n = self.len();
        let d = self.dim();
        let rows = (0..n)
            .map(|i| {
                let xi = self.path.point(i);
                let mut row = vec![0.0; (n - i) * d * d];
                for k in i..n - 1 {
                    let xk = self.path.point(k);
                    let xk1 = self.path.point(k + 1);
                    let off = (k - i) * d * d;
                    for a in 0..d {
                        let da = xk1[a] - xk[a];
                        let ya = xk[a] - xi[a];
                        for b in 0..d {
                            let db = xk1[b] - xk[b];
                            row[off + d * d + a * d + b] = row[off + a * d + b] + 0.5 * da * db + ya * db;
                        }
                    }
                }
                row
            })
            .collect();
        Level2Table { dim: d, rows }
    }
}

/// Every `B(t_i, t_j)` with `i <= j`.
#[derive(Debug, Clone)]
pub struct Level2Table {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl Level2Table {
    pub fn get(&self, i: usize, j: usize) -> Option<DMatrix<f64>> {
        let d = self.dim;
        let row = self.rows.get(i)?;
        let off = j.checked_sub(i)? * d * d;
        row.get(off..off + d * d).map(|s| DMatrix::from_row_slice(d, d, s))
    }
}

/// `B(t_i, t_k) + B(t_k, t_j) + X(t_i, t_k) (x) X(t_k, t_j)`.
pub fn chen_compose(lift: &RoughPathLift, i: usize, k: usize, j: usize) -> Result<DMatrix<f64>> {
    if !(i <= k && k <= j) {
        return domain(format!("chen_compose needs i <= k <= j, got ({i}, {k}, {j})"));
    }
    let left = lift.level2(i, k)?;
    let right = lift.level2(k, j)?;
    let xik = nalgebra::DVector::from_vec(lift.increment(i, k)?);
    let xkj = nalgebra::DVector::from_vec(lift.increment(k, j)?);
    Ok(left + right + xik * xkj.transpose())
}

/// `B(t_0, t_N)` of the lift of `path` coarsened by `factor`, without building it.
pub(crate) fn terminal_level2(path: &SamplePath, factor: usize) -> Vec<f64> {
    let d = path.dim();
    let mut acc = vec![0.0; d * d];
    let x0 = path.point(0);
    let mut k = 0;
    while k + factor < path.len() {
        let xk = path.point(k);
        let xk1 = path.point(k + factor);
        for a in 0..d {
            let da = xk1[a] - xk[a];
            let ya = xk[a] - x0[a];
            for b in 0..d {
                let db = xk1[b] - xk[b];
                acc[a * d + b] += 0.5 * da * db + ya * db;
            }
        }
        k += factor;
    }
    acc
}

/// Monte Carlo estimate of `e(N) = E[|B^(N)(0,T) - B^(2N)(0,T)|_F^2]^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementError {
    pub n: usize,
    pub error: f64,
    /// Delta-method standard error of `error`.
    pub stderr: f64,
}

fn check_refinement(params: &ModelParams, n: usize, n_mc: usize) -> Result<()> {
    params.require_liftable()?;
    if n_mc < 2 {
        return domain("n_mc must be at least 2");
    }
    if n == 0 || !n.is_power_of_two() {
        return domain(format!("N must be a power of two, got {n}"));
    }
    Ok(())
}

/// `e(N)` from `n_mc` paths simulated on the `2N` grid; the `N`-grid lift uses
/// the same path with every other point dropped.
pub fn refinement_error(params: &ModelParams, n: usize, n_mc: usize, rng: RngSpec) -> Result<RefinementError> {
    Ok(refinement_errors(params, &[n], n_mc, rng)?[0])
}

/// `e(N)` for several `N` from one batch of paths on the finest grid `2 max(N)`.
pub fn refinement_errors(
    params: &ModelParams,
    ns: &[usize],
    n_mc: usize,
    rng: RngSpec,
) -> Result<Vec<RefinementError>> {
    for &n in ns {
        check_refinement(params, n, n_mc)?;
    }
    let fine = 2 * ns.iter().copied().max().ok_or_else(|| crate::Error::Domain("no resolutions".into()))?;
    let sim = simulate_paths(params, fine, n_mc, rng)?;
    let sq: Vec<Vec<f64>> = sim
        .paths
        .par_iter()
        .map(|path| {
            ns.iter()
                .map(|&n| {
                    let coarse = terminal_level2(path, fine / n);
                    let finer = terminal_level2(path, fine / (2 * n));
                    coarse.iter().zip(&finer).map(|(a, b)| (a - b) * (a - b)).sum()
                })
                .collect()
        })
        .collect();
    Ok(ns
        .iter()
        .enumerate()
        .map(|(r, &n)| {
            let col: Vec<f64> = sq.iter().map(|row| row[r]).collect();
            let (error, stderr) = rms_with_se(&col);
            RefinementError { n, error, stderr }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Partition;

    fn poly(points: &[Vec<f64>]) -> SamplePath {
        let part = Partition::uniform(1.0, points.len() - 1).unwrap();
        SamplePath::from_points(part, points).unwrap()
    }

    #[test]
    fn single_interval_is_half_square() {
        let p = poly(&[vec![0.0, 0.0], vec![0.3, -1.2]]);
        let lift = lift_piecewise_linear(&p).unwrap();
        let b = lift.level2(0, 1).unwrap();
        assert_eq!(b[(0, 0)], 0.5 * 0.3 * 0.3);
        assert_eq!(b[(0, 1)], 0.5 * 0.3 * -1.2);
        assert_eq!(b[(1, 0)], 0.5 * -1.2 * 0.3);
        assert_eq!(b[(1, 1)], 0.5 * 1.44);
        assert_eq!(lift.adjacent(0).unwrap(), b);
    }

    #[test]
    fn three_point_example() {
        let p = poly(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        let lift = lift_piecewise_linear(&p).unwrap();
        let b = lift.level2(0, 2).unwrap();
        assert_eq!(b[(0, 0)], 0.5);
        assert_eq!(b[(1, 1)], 0.5);
        assert_eq!(b[(0, 1)], 1.0);
        assert_eq!(b[(1, 0)], 0.0);
        let area = lift.levy_area(0, 2).unwrap();
        assert_eq!(area[(0, 1)], 0.5);
    }

    #[test]
    fn one_dimensional_telescopes() {
        let p = poly(&[vec![0.0], vec![0.4], vec![-0.1], vec![0.9], vec![0.2]]);
        let lift = lift_piecewise_linear(&p).unwrap();
        let b = lift.level2(0, 4).unwrap()[(0, 0)];
        assert!((b - 0.5 * 0.2 * 0.2).abs() < 1e-15);
        let c = chen_compose(&lift, 0, 2, 4).unwrap()[(0, 0)];
        assert!((c - 0.5 * 0.04).abs() < 1e-15);
    }

    #[test]
    fn degenerate_compositions() {
        let p = poly(&[vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, 0.3]]);
        let lift = lift_piecewise_linear(&p).unwrap();
        assert_eq!(chen_compose(&lift, 1, 1, 3).unwrap(), lift.level2(1, 3).unwrap());
        assert_eq!(chen_compose(&lift, 1, 3, 3).unwrap(), lift.level2(1, 3).unwrap());
        assert!(chen_compose(&lift, 2, 1, 3).is_err());
        assert!(lift.level2(3, 1).is_err());
        assert_eq!(lift.level2(2, 2).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn table_and_prefix_agree_with_direct() {
        let p = poly(&[vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, 0.3], vec![0.7, -0.2]]);
        let lift = lift_piecewise_linear(&p).unwrap();
        let table = lift.level2_table();
        for i in 0..5 {
            for j in i..5 {
                let direct = lift.level2(i, j).unwrap();
                assert!((table.get(i, j).unwrap() - &direct).norm() < 1e-14);
                assert!((lift.level2_from_prefix(i, j).unwrap() - &direct).norm() < 1e-14);
            }
        }
        assert!(table.get(3, 1).is_none());
    }

    #[test]
    fn fewer_than_two_points_rejected() {
        // a single point cannot form a partition either
        assert!(Partition::new(vec![0.0]).is_err());
    }

    #[test]
    fn terminal_matches_lift_on_coarsening() {
        let p = poly(&[vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, 0.3], vec![0.7, -0.2]]);
        let coarse = p.coarsen(2).unwrap();
        let lift = lift_piecewise_linear(&coarse).unwrap();
        let t = terminal_level2(&p, 2);
        let b = lift.level2(0, 2).unwrap();
        for a in 0..2 {
            for c in 0..2 {
                assert!((t[a * 2 + c] - b[(a, c)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn refinement_error_vanishes_in_one_dimension() {
        let params = ModelParams::new(0.4, 1.0, 1, 1.0).unwrap();
        let r = refinement_error(&params, 16, 10, RngSpec::new(4)).unwrap();
        assert!(r.error < 1e-14, "{}", r.error);
    }

    #[test]
    fn refinement_error_domain() {
        let params = ModelParams::new(0.4, 1.0, 2, 1.0).unwrap();
        assert!(refinement_error(&params, 16, 1, RngSpec::new(1)).is_err());
        assert!(refinement_error(&params, 12, 10, RngSpec::new(1)).is_err());
        let low = ModelParams::new(0.2, 1.0, 2, 1.0).unwrap();
        assert!(refinement_error(&low, 16, 10, RngSpec::new(1)).is_err());
    }
}
