//! 2D rho-variation sums of a covariance over partitions.

use crate::error::{domain, Result};
use crate::params::{ModelParams, Partition};
use crate::special::gamma;

use super::bounds::{C1Convention, DecompositionConstants};
use super::{CovarianceKernel, FbmKernel};

/// `( sum_{i,j} |R(t_i, t_{i+1}; t_j, t_{j+1})|^rho )^{1/rho}` for one partition.
pub fn rho_variation_sum<K: CovarianceKernel + ?Sized>(kernel: &K, partition: &Partition, rho: f64) -> Result<f64> {
    if !(rho >= 1.0 && rho.is_finite()) {
        return domain(format!("rho must be >= 1, got {rho}"));
    }
    let times = partition.times();
    let n = times.len();
    let g = kernel.gram(times);
    let at = |i: usize, j: usize| g[i * n + j];
    let mut total = 0.0;
    for i in 0..n - 1 {
        let mut row = 0.0;
        for j in 0..n - 1 {
            let r = at(i + 1, j + 1) - at(i + 1, j) - at(i, j + 1) + at(i, j);
            row += r.abs().powf(rho);
        }
        total += row;
    }
    Ok(total.powf(1.0 / rho))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub depth: u32,
    pub value: f64,
    /// Maximum of `value` over depths `1..=depth`: the running estimate of the supremum.
    pub running_max: f64,
}

/// Evaluate [`rho_variation_sum`] on dyadic partitions of depth `1..=max_depth`.
pub fn dyadic_rho_variation_sweep<K: CovarianceKernel + ?Sized>(
    kernel: &K,
    horizon: f64,
    rho: f64,
    max_depth: u32,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(max_depth as usize);
    let mut running = 0.0_f64;
    for depth in 1..=max_depth {
        let value = rho_variation_sum(kernel, &Partition::dyadic(horizon, depth)?, rho)?;
        running = running.max(value);
        rows.push(SweepRow { depth, value, running_max: running });
    }
    Ok(rows)
}

/// `sum_{i,j} D_i^alpha D_j^alpha exp(-beta |t_i - t_j|)` and the bound
/// `T d^{2 alpha - 1} + 2 T d^{2 alpha - 1} e^{-beta d} / (1 - e^{-beta d})`
/// where `d` is the mesh. The second term is `(2T/beta) d^{2alpha-2} (1 + O(d))`
/// with the geometric series summed exactly. The off-diagonal estimate assumes
/// `t_i - t_j >= (i - j) d`, which holds for uniform partitions.
pub fn partition_sum_bound_check(alpha: f64, beta: f64, partition: &Partition) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return domain(format!("alpha must lie in (0,2), got {alpha}"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    let times = partition.times();
    let gaps: Vec<f64> = times.windows(2).map(|w| (w[1] - w[0]).powf(alpha)).collect();
    let mut sum = 0.0;
    for (i, gi) in gaps.iter().enumerate() {
        for (j, gj) in gaps.iter().enumerate() {
            sum += gi * gj * (-beta * (times[i] - times[j]).abs()).exp();
        }
    }
    let t = partition.horizon();
    let d = partition.mesh();
    let q = (-beta * d).exp();
    let bound = t * d.powf(2.0 * alpha - 1.0) * (1.0 + 2.0 * q / (1.0 - q));
    Ok((sum, bound))
}

/// Assembled upper bound `C(H, lambda, T)` for the tempered rho-variation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoVariationBound {
    /// Dyadic estimate of the rho-variation of the `lambda -> 0` fBm covariance.
    pub fbm_part: f64,
    /// `C1 / Gamma(2H) * lambda^{2H} * T^2`.
    pub poly_part: f64,
    /// `C2 / (Gamma(2H) lambda^{2H}) * (K2 / lambda)^{1/rho}` with
    /// `K2 = (2T / (c rho)) (1 + 1 / (c lambda T))`.
    pub exp_part: f64,
    pub total: f64,
}

/// Evaluate the three-term bound on the tempered rho-variation.
///
/// The fBm term has no closed form and is estimated by a dyadic sweep of
/// depth `depth` on the `lambda -> 0` covariance. The polynomial term uses
/// `(sum_i D_i^rho)^{2/rho} <= T^2` for `rho >= 1`; the exponential term uses
/// the stated worst-case constant. `C1` follows the conservative convention.
pub fn rho_variation_bound(params: &ModelParams, rho: f64, depth: u32) -> Result<RhoVariationBound> {
    let h = params.hurst;
    let lambda = params.lambda;
    let t = params.horizon;
    let k = DecompositionConstants::new(h);
    let g2h = gamma(2.0 * h);
    let sweep = dyadic_rho_variation_sweep(&FbmKernel::tempered_limit(h), t, rho, depth)?;
    let fbm_part = sweep.last().map(|r| r.running_max).unwrap_or(0.0);
    let poly_part = k.c1_for(C1Convention::Max) / g2h * lambda.powf(2.0 * h) * t * t;
    let k2 = 2.0 * t / (k.c_exp * rho) * (1.0 + 1.0 / (k.c_exp * lambda * t));
    let exp_part = k.c2 / (g2h * lambda.powf(2.0 * h)) * (k2 / lambda).powf(1.0 / rho);
    Ok(RhoVariationBound { fbm_part, poly_part, exp_part, total: fbm_part + poly_part + exp_part })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{variance, TfbmKernel};

    #[test]
    fn rejects_rho_below_one() {
        let k = FbmKernel::standard(0.5);
        let p = Partition::uniform(1.0, 4).unwrap();
        assert!(rho_variation_sum(&k, &p, 0.9).is_err());
    }

    #[test]
    fn trivial_partition_gives_variance() {
        let params = ModelParams::scalar(0.3, 1.0).unwrap();
        let k = TfbmKernel::new(&params);
        let p = Partition::new(vec![0.0, 1.0]).unwrap();
        for rho in [1.0, 1.5, 1.9] {
            let v = rho_variation_sum(&k, &p, rho).unwrap();
            assert!((v - variance(&params, 1.0).unwrap()).abs() < 1e-14);
        }
    }

    // Brute-force oracle: sum over all rectangles via the four-corner formula on the kernel.
    fn brute(kernel: &impl CovarianceKernel, times: &[f64], rho: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..times.len() - 1 {
            for j in 0..times.len() - 1 {
                let r = kernel.covariance(times[i + 1], times[j + 1])
                    - kernel.covariance(times[i + 1], times[j])
                    - kernel.covariance(times[i], times[j + 1])
                    + kernel.covariance(times[i], times[j]);
                s += r.abs().powf(rho);
            }
        }
        s.powf(1.0 / rho)
    }

    #[test]
    fn brownian_limit_rho_one_gives_horizon() {
        let params = ModelParams::scalar(0.5, 1e-9).unwrap();
        let k = TfbmKernel::new(&params);
        for n in [1, 2, 5, 8, 16] {
            let p = Partition::uniform(1.0, n).unwrap();
            let v = rho_variation_sum(&k, &p, 1.0).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "n={n} v={v}");
            assert!((brute(&k, p.times(), 1.0) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_brute_force_on_nonuniform() {
        let k = TfbmKernel { hurst: 0.35, lambda: 2.0 };
        let p = Partition::new(vec![0.0, 0.05, 0.3, 0.31, 0.7, 1.2]).unwrap();
        for rho in [1.0, 1.43, 1.8] {
            let a = rho_variation_sum(&k, &p, rho).unwrap();
            let b = brute(&k, p.times(), rho);
            assert!((a - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn sweep_stays_below_assembled_bound() {
        let params = ModelParams::scalar(0.4, 1.0).unwrap();
        let rho = 1.0 / (2.0 * params.hurst);
        let bound = rho_variation_bound(&params, rho, 10).unwrap();
        let sweep = dyadic_rho_variation_sweep(&TfbmKernel::new(&params), 1.0, rho, 10).unwrap();
        for row in &sweep {
            assert!(row.value <= bound.total, "depth {}: {} > {}", row.depth, row.value, bound.total);
        }
    }

    #[test]
    fn partition_sum_bound_cases() {
        let single = Partition::new(vec![0.0, 2.0]).unwrap();
        let (s, b) = partition_sum_bound_check(0.7, 1.0, &single).unwrap();
        assert!((s - 2f64.powf(1.4)).abs() < 1e-14);
        assert!(s <= b);

        let p = Partition::uniform(1.0, 256).unwrap();
        let (s, b) = partition_sum_bound_check(1.25, 1.0, &p).unwrap();
        assert!(s <= b, "{s} > {b}");

        assert!(partition_sum_bound_check(2.0, 1.0, &p).is_err());
        assert!(partition_sum_bound_check(1.0, 0.0, &p).is_err());
    }

    #[test]
    fn partition_sum_is_relabeling_invariant() {
        let p = Partition::new(vec![0.0, 0.1, 0.25, 0.6, 1.0]).unwrap();
        let (a, _) = partition_sum_bound_check(1.1, 0.8, &p).unwrap();
        let t = p.times();
        let gaps: Vec<f64> = t.windows(2).map(|w| (w[1] - w[0]).powf(1.1)).collect();
        let mut swapped = 0.0;
        for j in 0..gaps.len() {
            for i in 0..gaps.len() {
                swapped += gaps[j] * gaps[i] * (-0.8 * (t[j] - t[i]).abs()).exp();
            }
        }
        assert!((a - swapped).abs() < 1e-14);
    }
}
