//! Variance and covariance of tempered fractional Brownian motion.
//!
//! The process is the moving average
//!
//! ```text
//! B(t) = 1/Gamma(H+1/2) * int [ e^{-lambda (t-s)_+} (t-s)_+^{H-1/2} - e^{-lambda (-s)_+} (-s)_+^{H-1/2} ] dW(s)
//! ```
//!
//! with stationary increments, so everything follows from the variance
//! function `C(t) = E[B(t)^2]` through `R(s,t) = (C(s) + C(t) - C(|t-s|)) / 2`.
//!
//! `C` has a closed form in terms of the modified Bessel function `K_H`.
//! For small `lambda * t` that form cancels catastrophically, so the
//! production path switches to the equivalent power series (obtained by
//! writing `K_H` through `I_{+-H}`, where the leading singular terms cancel
//! exactly). Direct quadrature of the squared kernel is kept as an
//! independent reference.

mod bounds;
mod rho_variation;

pub use bounds::{
    decomposition_error_bounds, decomposition_error_bounds_with, verify_decomposition, verify_decomposition_with,
    C1Convention, DecompositionConstants, DecompositionReport, FbmNormalization, Violation,
};
pub use rho_variation::{
    dyadic_rho_variation_sweep, partition_sum_bound_check, rho_variation_bound, rho_variation_sum, RhoVariationBound,
    SweepRow,
};

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::params::ModelParams;
use crate::special::{bessel_k, gamma, integrate};

/// Below this value of `lambda * t` the series form of the variance is used.
const SERIES_SWITCH: f64 = 2.0;

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("time must be finite and non-negative, got {t}"));
    }
    Ok(())
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return domain(format!("hurst must lie in (0,1), got {hurst}"));
    }
    Ok(())
}

/// `Var[B(t)]` for one component.
pub fn variance(params: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(variance_unchecked(params.hurst, params.lambda, t))
}

pub(crate) fn variance_unchecked(hurst: f64, lambda: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if lambda * t <= SERIES_SWITCH {
        variance_series(hurst, lambda, t)
    } else {
        variance_bessel_unchecked(hurst, lambda, t)
    }
}

/// Closed form through `K_H`:
/// `C(t) = [2 Gamma(2H) (2 lambda)^{-2H} - 2 Gamma(H+1/2)/sqrt(pi) (t/(2 lambda))^H K_H(lambda t)] / Gamma(H+1/2)^2`.
///
/// Accurate when `lambda * t` is not small; [`variance`] picks the stable route automatically.
pub fn variance_bessel(params: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(variance_bessel_unchecked(params.hurst, params.lambda, t))
}

fn variance_bessel_unchecked(h: f64, lambda: f64, t: f64) -> f64 {
    let g = gamma(h + 0.5);
    let first = 2.0 * gamma(2.0 * h) * (2.0 * lambda).powf(-2.0 * h);
    let second = 2.0 * g / PI.sqrt() * (t / (2.0 * lambda)).powf(h) * bessel_k(h, lambda * t);
    (first - second) / (g * g)
}

fn variance_series(h: f64, lambda: f64, t: f64) -> f64 {
    let z = lambda * t;
    let q = 0.25 * z * z;
    // sum_{k>=0} q^k / (k! Gamma(k+H+1)) and sum_{k>=1} q^k / (k! Gamma(k-H+1))
    let mut term_a = 1.0 / gamma(h + 1.0);
    let mut sum_a = term_a;
    let mut term_b = q / gamma(2.0 - h);
    let mut sum_b = term_b;
    for k in 1..200 {
        let kf = k as f64;
        term_a *= q / (kf * (kf + h));
        sum_a += term_a;
        term_b *= q / ((kf + 1.0) * (kf + 1.0 - h));
        sum_b += term_b;
        if term_a.abs() < 1e-17 * sum_a.abs() && term_b.abs() < 1e-17 * sum_b.abs().max(1e-300) {
            break;
        }
    }
    let bracket = 2f64.powf(-2.0 * h) * sum_a - z.powf(-2.0 * h) * sum_b;
    t.powf(2.0 * h) * PI.sqrt() / (gamma(h + 0.5) * (PI * h).sin()) * bracket
}

/// Variance by adaptive quadrature of the squared moving-average kernel.
///
/// Slow; used as the reference the closed form is checked against. The
/// `v^{2H-1}` singularity at the origin is removed by the substitution
/// `v = w^{1/(2H)}` when `H < 1/2`, and the tail is integrated on a
/// logarithmic scale.
pub fn variance_quadrature(params: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let h = params.hurst;
    let lambda = params.lambda;
    let tol = 1e-13 * t.powf(2.0 * h).max(1e-3);
    let g = gamma(h + 0.5);
    let inv = 1.0 / (2.0 * h);

    // Contribution of s in (0, t): int_0^t e^{-2 lambda u} u^{2H-1} du, with w = u^{2H}.
    let inner = inv * integrate(|w: f64| (-2.0 * lambda * w.powf(inv)).exp(), 0.0, t.powf(2.0 * h), tol);

    // Contribution of s < 0, in v = -s.
    let kernel = |v: f64| {
        let a = (-lambda * (t + v)).exp() * (t + v).powf(h - 0.5);
        let b = (-lambda * v).exp() * v.powf(h - 0.5);
        (a - b) * (a - b)
    };
    let near = if h < 0.5 {
        inv * integrate(
            |w: f64| {
                let v = w.powf(inv);
                kernel(v) * v.powf(1.0 - 2.0 * h)
            },
            0.0,
            t.powf(2.0 * h),
            tol,
        )
    } else {
        integrate(kernel, 0.0, t, tol)
    };
    let s_max = (25.0 / (lambda * t)).max(1.0).ln() + 3.0;
    let far = integrate(
        |s: f64| {
            let v = t * s.exp();
            kernel(v) * v
        },
        0.0,
        s_max,
        tol,
    );

    Ok((inner + near + far) / (g * g))
}

/// `lim_{lambda -> 0} C(t) / t^{2H} = 1 / (Gamma(2H+1) sin(pi H))`.
///
/// The moving-average normalisation does not give unit variance at `t = 1`;
/// this is the factor relating the `lambda -> 0` limit to standard fBm.
pub fn fbm_limit_scale(hurst: f64) -> f64 {
    1.0 / (gamma(2.0 * hurst + 1.0) * (PI * hurst).sin())
}

/// `R(s,t) = (C(s) + C(t) - C(|t-s|)) / 2`.
pub fn covariance(params: &ModelParams, s: f64, t: f64) -> Result<f64> {
    check_time(s)?;
    check_time(t)?;
    Ok(covariance_unchecked(params.hurst, params.lambda, s, t))
}

pub(crate) fn covariance_unchecked(h: f64, lambda: f64, s: f64, t: f64) -> f64 {
    0.5 * (variance_unchecked(h, lambda, s) + variance_unchecked(h, lambda, t)
        - variance_unchecked(h, lambda, (t - s).abs()))
}

/// Standard fractional Brownian motion covariance `(s^{2H} + t^{2H} - |t-s|^{2H}) / 2`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> Result<f64> {
    check_hurst(hurst)?;
    check_time(s)?;
    check_time(t)?;
    let two_h = 2.0 * hurst;
    Ok(0.5 * (s.powf(two_h) + t.powf(two_h) - (t - s).abs().powf(two_h)))
}

/// `E[(B_t - B_s)(B_v - B_u)]` for `s <= t`, `u <= v`.
pub fn incremental_covariance(params: &ModelParams, s: f64, t: f64, u: f64, v: f64) -> Result<f64> {
    for x in [s, t, u, v] {
        check_time(x)?;
    }
    if s > t || u > v {
        return domain(format!("intervals must be ordered: [{s},{t}] and [{u},{v}]"));
    }
    let r = |a, b| covariance_unchecked(params.hurst, params.lambda, a, b);
    Ok(r(t, v) - r(t, u) - r(s, v) + r(s, u))
}

/// A covariance function `R(s, t)` of a centred process started at zero.
pub trait CovarianceKernel: Sync {
    fn covariance(&self, s: f64, t: f64) -> f64;

    /// Row-major Gram matrix `[R(t_i, t_j)]`.
    fn gram(&self, times: &[f64]) -> Vec<f64> {
        use rayon::prelude::*;
        let n = times.len();
        let mut out = vec![0.0; n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.covariance(times[i], times[j]);
            }
        });
        out
    }
}

/// Kernel of the tempered process.
#[derive(Debug, Clone, Copy)]
pub struct TfbmKernel {
    pub hurst: f64,
    pub lambda: f64,
}

impl TfbmKernel {
    pub fn new(params: &ModelParams) -> Self {
        Self { hurst: params.hurst, lambda: params.lambda }
    }
}

impl CovarianceKernel for TfbmKernel {
    fn covariance(&self, s: f64, t: f64) -> f64 {
        covariance_unchecked(self.hurst, self.lambda, s, t)
    }

    fn gram(&self, times: &[f64]) -> Vec<f64> {
        use rayon::prelude::*;
        let n = times.len();
        let var: Vec<f64> = times.iter().map(|&t| variance_unchecked(self.hurst, self.lambda, t)).collect();
        let mut out = vec![0.0; n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, cell) in row.iter_mut().enumerate() {
                let lag = variance_unchecked(self.hurst, self.lambda, (times[j] - times[i]).abs());
                *cell = 0.5 * (var[i] + var[j] - lag);
            }
        });
        out
    }
}

/// Fractional Brownian motion kernel, optionally rescaled.
#[derive(Debug, Clone, Copy)]
pub struct FbmKernel {
    pub hurst: f64,
    pub scale: f64,
}

impl FbmKernel {
    pub fn standard(hurst: f64) -> Self {
        Self { hurst, scale: 1.0 }
    }

    /// The `lambda -> 0` limit of the tempered process with the same Hurst index.
    pub fn tempered_limit(hurst: f64) -> Self {
        Self { hurst, scale: fbm_limit_scale(hurst) }
    }
}

impl CovarianceKernel for FbmKernel {
    fn covariance(&self, s: f64, t: f64) -> f64 {
        let two_h = 2.0 * self.hurst;
        0.5 * self.scale * (s.powf(two_h) + t.powf(two_h) - (t - s).abs().powf(two_h))
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> CovarianceKernel for F {
    fn covariance(&self, s: f64, t: f64) -> f64 {
        self(s, t)
    }
}
