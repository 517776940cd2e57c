//! Error bounds for the split `R_{H,lambda} = R_H + E1 + E2`.
//!
//! `|E1(s,t)| <= C1(H) / Gamma(2H) * lambda^{2H} |t-s|^2` and
//! `|E2(s,t)| <= C2(H) / (Gamma(2H) lambda^{2H}) * exp(-c(H) lambda d(s,t))`
//! with `d(s,t) = max(s, t, |t-s|)`.

use crate::error::Result;
use crate::params::{ModelParams, Partition};
use crate::special::gamma;

use super::{check_time, covariance_unchecked, fbm_limit_scale};

/// Which value of `C1(H)` to use. Two expressions are in circulation:
/// `Gamma(2H+2)/2` and `Gamma(2H+2) / (4 Gamma(H+1/2)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum C1Convention {
    /// `Gamma(2H+2) / 2`.
    Short,
    /// `Gamma(2H+2) / (4 Gamma(H+1/2)^2)`, the value produced by the kernel expansion.
    Derived,
    /// The larger of the two.
    #[default]
    Max,
}

/// Constants `C1(H)`, `c(H)` and `C2(H)` of the decomposition bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionConstants {
    /// `C1(H)` under the derived convention.
    pub c1: f64,
    pub c1_short: f64,
    pub c1_derived: f64,
    /// `c(H) = min(1/2, H/2)`.
    pub c_exp: f64,
    /// `C2(H) = sup_x x^{2H} e^{-c x} = (2H / (c e))^{2H}`.
    pub c2: f64,
}

impl DecompositionConstants {
    pub fn new(hurst: f64) -> Self {
        let g2 = gamma(2.0 * hurst + 2.0);
        let gh = gamma(hurst + 0.5);
        let c1_short = 0.5 * g2;
        let c1_derived = g2 / (4.0 * gh * gh);
        let c_exp = f64::min(0.5, 0.5 * hurst);
        let c2 = (2.0 * hurst / (c_exp * std::f64::consts::E)).powf(2.0 * hurst);
        Self { c1: c1_derived, c1_short, c1_derived, c_exp, c2 }
    }

    pub fn c1_for(&self, convention: C1Convention) -> f64 {
        match convention {
            C1Convention::Short => self.c1_short,
            C1Convention::Derived => self.c1_derived,
            C1Convention::Max => self.c1_short.max(self.c1_derived),
        }
    }
}

/// `(bound_poly, bound_exp)` at `(s, t)` using the conservative `C1` convention.
pub fn decomposition_error_bounds(params: &ModelParams, s: f64, t: f64) -> Result<(f64, f64)> {
    decomposition_error_bounds_with(params, s, t, C1Convention::Max)
}

pub fn decomposition_error_bounds_with(
    params: &ModelParams,
    s: f64,
    t: f64,
    convention: C1Convention,
) -> Result<(f64, f64)> {
    check_time(s)?;
    check_time(t)?;
    let h = params.hurst;
    let lambda = params.lambda;
    let k = DecompositionConstants::new(h);
    let g2h = gamma(2.0 * h);
    let d = s.max(t).max((t - s).abs());
    let poly = k.c1_for(convention) / g2h * lambda.powf(2.0 * h) * (t - s) * (t - s);
    let exp = k.c2 / (g2h * lambda.powf(2.0 * h)) * (-k.c_exp * lambda * d).exp();
    Ok((poly, exp))
}

/// Which fBm covariance the tempered covariance is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FbmNormalization {
    /// `(s^{2H} + t^{2H} - |t-s|^{2H}) / 2`.
    Standard,
    /// The standard covariance times [`fbm_limit_scale`], i.e. the actual
    /// `lambda -> 0` limit of the tempered process.
    #[default]
    LambdaLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub s: f64,
    pub t: f64,
    pub gap: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub pairs: usize,
    /// Largest `|R_{H,lambda} - R_H|` on the grid.
    pub max_gap: f64,
    /// Smallest `bound - gap` on the grid (negative when violated).
    pub min_slack: f64,
    pub violations: Vec<Violation>,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check `|R_{H,lambda}(s,t) - R_H(s,t)| <= bound_poly + bound_exp` on every grid pair.
pub fn verify_decomposition(params: &ModelParams, grid: &Partition) -> DecompositionReport {
    verify_decomposition_with(params, grid, FbmNormalization::default(), C1Convention::default())
}

pub fn verify_decomposition_with(
    params: &ModelParams,
    grid: &Partition,
    normalization: FbmNormalization,
    convention: C1Convention,
) -> DecompositionReport {
    let h = params.hurst;
    let scale = match normalization {
        FbmNormalization::Standard => 1.0,
        FbmNormalization::LambdaLimit => fbm_limit_scale(h),
    };
    let mut report = DecompositionReport { pairs: 0, max_gap: 0.0, min_slack: f64::INFINITY, violations: Vec::new() };
    for &s in grid.times() {
        for &t in grid.times() {
            let tempered = covariance_unchecked(h, params.lambda, s, t);
            let fbm = 0.5 * scale * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h));
            let gap = (tempered - fbm).abs();
            let (poly, exp) =
                decomposition_error_bounds_with(params, s, t, convention).expect("grid times are non-negative");
            let bound = poly + exp;
            report.pairs += 1;
            report.max_gap = report.max_gap.max(gap);
            report.min_slack = report.min_slack.min(bound - gap);
            if gap > bound {
                report.violations.push(Violation { s, t, gap, bound });
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_arithmetic() {
        let k = DecompositionConstants::new(0.3);
        assert!((k.c_exp - 0.15).abs() < 1e-16);
        let k = DecompositionConstants::new(0.5);
        assert_eq!(k.c_exp, 0.25);
        assert!((k.c2 - 4.0 / std::f64::consts::E).abs() < 1e-14);
        // Gamma(3)/2 = 1 and Gamma(3)/(4 Gamma(1)^2) = 1/2
        assert!((k.c1_short - 1.0).abs() < 1e-13);
        assert!((k.c1_derived - 0.5).abs() < 1e-13);
        assert_eq!(k.c1_for(C1Convention::Max), k.c1_short);
        for h in [0.05, 0.3, 0.7, 0.95] {
            let k = DecompositionConstants::new(h);
            assert!(k.c1 > 0.0 && k.c_exp > 0.0 && k.c2 > 0.0);
            assert_eq!(k.c_exp, f64::min(0.5, h / 2.0));
            let expected = (2.0 * h / (k.c_exp * std::f64::consts::E)).powf(2.0 * h);
            assert_eq!(k.c2, expected);
        }
    }

    #[test]
    fn c2_is_the_supremum() {
        for h in [0.2, 0.4, 0.8] {
            let k = DecompositionConstants::new(h);
            let sup = (1..200_000)
                .map(|i| {
                    let x = i as f64 * 1e-3;
                    x.powf(2.0 * h) * (-k.c_exp * x).exp()
                })
                .fold(0.0, f64::max);
            assert!((sup - k.c2).abs() < 1e-6 * k.c2);
        }
    }

    #[test]
    fn exponential_bound_decreases_with_distance() {
        let params = ModelParams::scalar(0.4, 2.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let t = 0.1 * i as f64;
            let (_, e) = decomposition_error_bounds(&params, 0.0, t).unwrap();
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn origin_has_zero_gap() {
        let params = ModelParams::scalar(0.4, 1.0).unwrap();
        let grid = Partition::new(vec![0.0, 1.0]).unwrap();
        let r = verify_decomposition(&params, &grid);
        assert_eq!(r.pairs, 4);
        let (p, e) = decomposition_error_bounds(&params, 0.0, 0.0).unwrap();
        assert_eq!(p, 0.0);
        assert!(e > 0.0);
    }

    #[test]
    fn moderate_lambda_grid_has_no_violations() {
        let params = ModelParams::scalar(0.4, 1.0).unwrap();
        let grid = Partition::uniform(1.0, 63).unwrap();
        let r = verify_decomposition(&params, &grid);
        assert_eq!(r.pairs, 64 * 64);
        assert!(r.passed(), "{:?}", r.violations.first());
    }

    #[test]
    fn gap_vanishes_as_lambda_shrinks() {
        let grid = Partition::uniform(1.0, 31).unwrap();
        let mut prev = f64::INFINITY;
        for lambda in [1.0, 0.1, 0.01, 0.001] {
            let params = ModelParams::scalar(0.4, lambda).unwrap();
            let r = verify_decomposition(&params, &grid);
            assert!(r.max_gap < prev);
            prev = r.max_gap;
        }
        assert!(prev < 5e-3);
    }
}
