//! Rough differential equations `dY = f(Y) dB` driven by a level-2 lift.
//!
//! The Milstein step is
//! `Y_{k+1} = Y_k + f(Y_k) dB_k + sum_{a,b} (f_a . grad) f_b (Y_k) B_k^{ab}`
//! with `B_k` the lift over the k-th grid interval.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::params::ModelParams;
use crate::roughpath::{lift_piecewise_linear, RoughPathLift};
use crate::simulate::{simulate_paths, RngSpec, SamplePath};
use crate::stats::{loglog_fit, mean_with_se, rms_with_se};

/// Informational regularity flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FieldFlags {
    pub globally_lipschitz: bool,
    pub c3_bounded: bool,
}

/// `f: R^m -> R^{m x d}` and its derivative.
pub trait VectorField: Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    /// Row-major `m x d`: `out[i * d + a] = f_{ia}(y)`.
    fn eval(&self, y: &[f64], out: &mut [f64]);
    /// `out[(i * d + a) * m + j] = d f_{ia} / d y_j`.
    fn jacobian(&self, y: &[f64], out: &mut [f64]);
    fn flags(&self) -> FieldFlags {
        FieldFlags::default()
    }
    /// Closed-form terminal value for the driver `path`, when one exists.
    fn exact_terminal(&self, _y0: &[f64], _path: &SamplePath) -> Option<Vec<f64>> {
        None
    }
}

/// `f = 0`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField {
    pub state_dim: usize,
    pub noise_dim: usize,
}

impl VectorField for ZeroField {
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn noise_dim(&self) -> usize {
        self.noise_dim
    }
    fn eval(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn jacobian(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn flags(&self) -> FieldFlags {
        FieldFlags { globally_lipschitz: true, c3_bounded: true }
    }
    fn exact_terminal(&self, y0: &[f64], _: &SamplePath) -> Option<Vec<f64>> {
        Some(y0.to_vec())
    }
}

/// Additive noise `f = sigma`, a constant row-major `m x d` matrix.
#[derive(Debug, Clone)]
pub struct AdditiveField {
    pub state_dim: usize,
    pub noise_dim: usize,
    pub sigma: Vec<f64>,
}

impl VectorField for AdditiveField {
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn noise_dim(&self) -> usize {
        self.noise_dim
    }
    fn eval(&self, _: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.sigma);
    }
    fn jacobian(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn flags(&self) -> FieldFlags {
        FieldFlags { globally_lipschitz: true, c3_bounded: true }
    }
    fn exact_terminal(&self, y0: &[f64], path: &SamplePath) -> Option<Vec<f64>> {
        let b = path.total_increment();
        let d = self.noise_dim;
        Some((0..self.state_dim).map(|i| y0[i] + (0..d).map(|a| self.sigma[i * d + a] * b[a]).sum::<f64>()).collect())
    }
}

/// The scalar linear equation `dY = Y dB`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarLinear;

impl VectorField for ScalarLinear {
    fn state_dim(&self) -> usize {
        1
    }
    fn noise_dim(&self) -> usize {
        1
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        out[0] = y[0];
    }
    fn jacobian(&self, _: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
    }
    fn flags(&self) -> FieldFlags {
        FieldFlags { globally_lipschitz: true, c3_bounded: false }
    }
    fn exact_terminal(&self, y0: &[f64], path: &SamplePath) -> Option<Vec<f64>> {
        exact_scalar_linear(path).ok().map(|e| vec![y0[0] * e])
    }
}

type EvalFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A vector field given by closures.
pub struct FnField {
    state_dim: usize,
    noise_dim: usize,
    f: Box<EvalFn>,
    df: Box<EvalFn>,
    flags: FieldFlags,
}

impl FnField {
    pub fn new(
        state_dim: usize,
        noise_dim: usize,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        df: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { state_dim, noise_dim, f: Box::new(f), df: Box::new(df), flags: FieldFlags::default() }
    }

    pub fn with_flags(mut self, flags: FieldFlags) -> Self {
        self.flags = flags;
        self
    }
}

impl VectorField for FnField {
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn noise_dim(&self) -> usize {
        self.noise_dim
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        (self.f)(y, out)
    }
    fn jacobian(&self, y: &[f64], out: &mut [f64]) {
        (self.df)(y, out)
    }
    fn flags(&self) -> FieldFlags {
        self.flags
    }
}

/// Largest discrepancy between the analytic Jacobian and central differences
/// with step `h`, relative to `max(1, |df|)`, over `states`.
pub fn jacobian_error<V: VectorField + ?Sized>(vf: &V, states: &[Vec<f64>], h: f64) -> f64 {
    let m = vf.state_dim();
    let d = vf.noise_dim();
    let mut analytic = vec![0.0; m * d * m];
    let mut plus = vec![0.0; m * d];
    let mut minus = vec![0.0; m * d];
    let mut worst = 0.0_f64;
    for y in states {
        vf.jacobian(y, &mut analytic);
        for j in 0..m {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[j] += h;
            ym[j] -= h;
            vf.eval(&yp, &mut plus);
            vf.eval(&ym, &mut minus);
            for ia in 0..m * d {
                let fd = (plus[ia] - minus[ia]) / (2.0 * h);
                let an = analytic[ia * m + j];
                worst = worst.max((fd - an).abs() / an.abs().max(1.0));
            }
        }
    }
    worst
}

/// [`jacobian_error`] at `n` standard-normal states scaled by `scale`.
pub fn jacobian_check<V: VectorField + ?Sized>(vf: &V, n: usize, scale: f64, rng: RngSpec) -> f64 {
    let mut r = rng.rng();
    let states: Vec<Vec<f64>> =
        (0..n).map(|_| (0..vf.state_dim()).map(|_| scale * r.sample::<f64, _>(StandardNormal)).collect()).collect();
    jacobian_error(vf, &states, 1e-6)
}

/// States on the grid of the driving lift.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub dim: usize,
    /// Row-major `(N+1) x m`.
    pub states: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn terminal(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Header `t,y0,...`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let cols: Vec<String> = (0..self.dim).map(|i| format!("y{i}")).collect();
        writeln!(out, "t,{}", cols.join(","))?;
        for k in 0..self.len() {
            let vals: Vec<String> = self.state(k).iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{:.17e},{}", self.times[k], vals.join(","))?;
        }
        Ok(())
    }
}

fn check_dims<V: VectorField + ?Sized>(vf: &V, y0: &[f64], noise_dim: usize) -> Result<()> {
    if y0.len() != vf.state_dim() {
        return domain(format!("initial state has {} entries, field expects {}", y0.len(), vf.state_dim()));
    }
    if noise_dim != vf.noise_dim() {
        return domain(format!("driver has dimension {noise_dim}, field expects {}", vf.noise_dim()));
    }
    Ok(())
}

/// Milstein scheme over every interval of the lift's grid.
pub fn milstein_solve<V: VectorField + ?Sized>(vf: &V, y0: &[f64], lift: &RoughPathLift) -> Result<Trajectory> {
    check_dims(vf, y0, lift.dim())?;
    if !lift.path().partition().is_uniform(1e-9) {
        return domain("the Milstein scheme expects a uniform grid");
    }
    let m = vf.state_dim();
    let d = vf.noise_dim();
    let n = lift.len();
    let path = lift.path();
    let mut states = Vec::with_capacity(n * m);
    states.extend_from_slice(y0);
    let mut f = vec![0.0; m * d];
    let mut df = vec![0.0; m * d * m];
    // correction[i][a][b] = sum_j df_{ib,j} f_{ja}
    let mut corr = vec![0.0; m * d * d];
    let mut y = y0.to_vec();
    for k in 0..n - 1 {
        let db = path.increment(k, k + 1);
        let bb = lift.adjacent(k)?;
        vf.eval(&y, &mut f);
        vf.jacobian(&y, &mut df);
        for i in 0..m {
            for a in 0..d {
                for b in 0..d {
                    corr[(i * d + a) * d + b] = (0..m).map(|j| df[(i * d + b) * m + j] * f[j * d + a]).sum();
                }
            }
        }
        for i in 0..m {
            let mut dy = 0.0;
            for a in 0..d {
                dy += f[i * d + a] * db[a];
                for b in 0..d {
                    dy += corr[(i * d + a) * d + b] * bb[(a, b)];
                }
            }
            y[i] += dy;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: k + 1 });
        }
        states.extend_from_slice(&y);
    }
    Ok(Trajectory { times: path.partition().times().to_vec(), dim: m, states })
}

/// `exp(B(T) - B(0))`, the solution of `dY = Y dB`, `Y_0 = 1`, for a geometric lift.
pub fn exact_scalar_linear(path: &SamplePath) -> Result<f64> {
    if path.dim() != 1 {
        return domain(format!("the scalar linear oracle needs a 1-d path, got dim {}", path.dim()));
    }
    Ok(path.total_increment()[0].exp())
}

/// How the strong-error reference was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Exact,
    /// Milstein on a grid eight times finer than the finest resolution.
    FineMilstein,
}

/// Strong errors `E[|Y_T - Y_T^(n)|^2]^{1/2}` per resolution and their log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub resolutions: Vec<usize>,
    pub errors: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// NaN when some error is exactly zero.
    pub slope: f64,
    pub slope_stderr: f64,
    pub n_mc: usize,
    pub seed: u64,
    pub stream: u64,
    pub reference: ReferenceKind,
}

impl ConvergenceReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,error,stderr")?;
        for ((n, e), s) in self.resolutions.iter().zip(&self.errors).zip(&self.stderrs) {
            writeln!(out, "{n},{e:.10e},{s:.10e}")?;
        }
        writeln!(out, "# slope={:.6},slope_stderr={:.6}", self.slope, self.slope_stderr)?;
        Ok(())
    }
}

/// Sorted, distinct powers of two, each dividing the next.
pub(crate) fn check_resolutions(resolutions: &[usize], min_len: usize) -> Result<()> {
    if resolutions.len() < min_len {
        return domain(format!("need at least {min_len} resolutions, got {}", resolutions.len()));
    }
    if resolutions.iter().any(|n| *n == 0 || !n.is_power_of_two()) {
        return domain("resolutions must be powers of two");
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return domain("resolutions must be strictly increasing");
    }
    Ok(())
}

/// Monte Carlo strong error of the Milstein scheme. Every resolution is driven
/// by coarsenings of one path per replica, simulated on the finest grid (or
/// eight times finer when the field has no closed-form solution).
pub fn strong_error<V: VectorField + ?Sized>(
    params: &ModelParams,
    vf: &V,
    y0: &[f64],
    resolutions: &[usize],
    n_mc: usize,
    rng: RngSpec,
) -> Result<ConvergenceReport> {
    params.require_liftable()?;
    check_dims(vf, y0, params.dim)?;
    check_resolutions(resolutions, 3)?;
    if n_mc < 2 {
        return domain("n_mc must be at least 2");
    }
    let finest = *resolutions.last().unwrap();
    let probe =
        SamplePath::new(crate::params::Partition::uniform(params.horizon, 1)?, params.dim, vec![0.0; 2 * params.dim])?;
    let reference =
        if vf.exact_terminal(y0, &probe).is_some() { ReferenceKind::Exact } else { ReferenceKind::FineMilstein };
    let fine = match reference {
        ReferenceKind::Exact => finest,
        ReferenceKind::FineMilstein => 8 * finest,
    };
    let sim = simulate_paths(params, fine, n_mc, rng)?;
    let sq: Vec<Vec<f64>> = sim
        .paths
        .par_iter()
        .map(|path| {
            let target = match vf.exact_terminal(y0, path) {
                Some(y) => y,
                None => milstein_solve(vf, y0, &lift_piecewise_linear(path)?)?.terminal().to_vec(),
            };
            resolutions
                .iter()
                .map(|&n| {
                    let coarse = path.coarsen(fine / n)?;
                    let traj = milstein_solve(vf, y0, &lift_piecewise_linear(&coarse)?)?;
                    Ok(traj.terminal().iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum())
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut errors = Vec::new();
    let mut stderrs = Vec::new();
    for r in 0..resolutions.len() {
        let col: Vec<f64> = sq.iter().map(|row| row[r]).collect();
        let (e, s) = rms_with_se(&col);
        errors.push(e);
        stderrs.push(s);
    }
    let xs: Vec<f64> = resolutions.iter().map(|&n| n as f64).collect();
    let (slope, slope_stderr) = match loglog_fit(&xs, &errors) {
        Ok(fit) => (fit.slope, fit.slope_stderr),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(ConvergenceReport {
        resolutions: resolutions.to_vec(),
        errors,
        stderrs,
        slope,
        slope_stderr,
        n_mc,
        seed: rng.seed,
        stream: rng.stream,
        reference,
    })
}

/// Integrand `X = phi(B)` for a path integral `int X dB`.
pub trait OneForm: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64], out: &mut [f64]);
    /// Row-major `d x d`: `out[a * d + b] = d phi_a / d x_b`.
    fn jacobian(&self, x: &[f64], out: &mut [f64]);
}

/// `phi(x) = x`.
#[derive(Debug, Clone, Copy)]
pub struct PathItself {
    pub dim: usize,
}

impl OneForm for PathItself {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn jacobian(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for a in 0..self.dim {
            out[a * self.dim + a] = 1.0;
        }
    }
}

/// `phi(x) = c`.
#[derive(Debug, Clone)]
pub struct ConstantForm(pub Vec<f64>);

impl OneForm for ConstantForm {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn value(&self, _: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
    fn jacobian(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Left-point Riemann sum `sum_k phi(B_k) . dB_k`.
pub fn young_integral<F: OneForm + ?Sized>(form: &F, path: &SamplePath) -> f64 {
    let d = path.dim();
    let mut v = vec![0.0; d];
    let mut total = 0.0;
    for k in 0..path.len() - 1 {
        form.value(path.point(k), &mut v);
        total += (0..d).map(|a| v[a] * (path.value(k + 1, a) - path.value(k, a))).sum::<f64>();
    }
    total
}

/// Compensated sum `sum_k phi(B_k) . dB_k + sum_{a,b} d_b phi_a(B_k) B_k^{ba}`.
pub fn rough_integral<F: OneForm + ?Sized>(form: &F, lift: &RoughPathLift) -> Result<f64> {
    let path = lift.path();
    let d = path.dim();
    let mut jac = vec![0.0; d * d];
    let mut total = young_integral(form, path);
    for k in 0..path.len() - 1 {
        form.jacobian(path.point(k), &mut jac);
        let bb = lift.adjacent(k)?;
        for a in 0..d {
            for b in 0..d {
                total += jac[a * d + b] * bb[(b, a)];
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct YoungRoughReport {
    pub resolutions: Vec<usize>,
    /// Mean over replicas of `|Young - rough|`.
    pub mean_abs_diff: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// `-slope` of the log-log fit; NaN when a difference is exactly zero.
    pub observed_rate: f64,
    pub n_mc: usize,
}

impl YoungRoughReport {
    pub fn monotone_decreasing(&self) -> bool {
        self.mean_abs_diff.windows(2).all(|w| w[1] < w[0])
    }

    pub fn final_diff(&self) -> f64 {
        *self.mean_abs_diff.last().unwrap()
    }
}

/// Left-point Riemann sums against compensated rough sums of `int phi(B) dB`
/// across nested dyadic grids, on shared paths.
pub fn young_vs_rough_compare<F: OneForm + ?Sized>(
    params: &ModelParams,
    form: &F,
    resolutions: &[usize],
    n_mc: usize,
    rng: RngSpec,
) -> Result<YoungRoughReport> {
    if params.hurst <= 0.5 {
        return domain(format!("Riemann sums need hurst > 1/2, got {}", params.hurst));
    }
    if form.dim() != params.dim {
        return domain("integrand and driver dimensions differ");
    }
    check_resolutions(resolutions, 1)?;
    if n_mc < 2 {
        return domain("n_mc must be at least 2");
    }
    let fine = *resolutions.last().unwrap();
    let sim = simulate_paths(params, fine, n_mc, rng)?;
    let diffs: Vec<Vec<f64>> = sim
        .paths
        .par_iter()
        .map(|path| {
            resolutions
                .iter()
                .map(|&n| {
                    let coarse = path.coarsen(fine / n)?;
                    let lift = lift_piecewise_linear(&coarse)?;
                    Ok((young_integral(form, &coarse) - rough_integral(form, &lift)?).abs())
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut mean_abs_diff = Vec::new();
    let mut stderrs = Vec::new();
    for r in 0..resolutions.len() {
        let col: Vec<f64> = diffs.iter().map(|row| row[r]).collect();
        let (m, s) = mean_with_se(&col);
        mean_abs_diff.push(m);
        stderrs.push(s);
    }
    let xs: Vec<f64> = resolutions.iter().map(|&n| n as f64).collect();
    let observed_rate = loglog_fit(&xs, &mean_abs_diff).map(|f| -f.slope).unwrap_or(f64::NAN);
    Ok(YoungRoughReport { resolutions: resolutions.to_vec(), mean_abs_diff, stderrs, observed_rate, n_mc })
}
