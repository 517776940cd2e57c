//! Exact simulation of tempered fBm on grids.
//!
//! Uniform grids use circulant embedding of the stationary increment
//! autocovariance (Dietrich-Newsam / Davies-Harte): one complex FFT of size
//! `2m` yields two independent exact increment sequences, one in the real
//! part and one in the imaginary part. A dense Cholesky factorisation of the
//! Gram matrix is the fallback and the test oracle.

use std::io::Write;
use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::covariance::{variance_unchecked, CovarianceKernel, TfbmKernel};
use crate::error::{domain, Error, Result};
use crate::params::{ModelParams, Partition};

/// Seed plus substream index. Equal specs reproduce equal draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// RNG settings for the `index`-th path in a batch started at `self`.
    pub fn substream(self, index: u64) -> Self {
        Self { seed: self.seed, stream: self.stream.wrapping_add(index) }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// A `dim`-dimensional path sampled on a partition; row `i` is the value at `t_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    partition: Partition,
    dim: usize,
    values: Vec<f64>,
}

impl SamplePath {
    /// `values` is row-major with shape `(partition.len(), dim)` and must start at the origin.
    pub fn new(partition: Partition, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return domain("path dimension must be at least 1");
        }
        if values.len() != partition.len() * dim {
            return domain(format!(
                "expected {} values for {} points in dimension {dim}, got {}",
                partition.len() * dim,
                partition.len(),
                values.len()
            ));
        }
        if values[..dim].iter().any(|&v| v != 0.0) {
            return domain("sample paths must start at the origin");
        }
        Ok(Self { partition, dim, values })
    }

    /// Build from points given as rows.
    pub fn from_points(partition: Partition, points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return domain("all points must have the same dimension");
        }
        Self::new(partition, dim, points.concat())
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.dim + k]
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i, k)).collect()
    }

    /// `X(t_j) - X(t_i)`.
    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        self.point(j).iter().zip(self.point(i)).map(|(b, a)| b - a).collect()
    }

    /// Terminal value minus initial value.
    pub fn total_increment(&self) -> Vec<f64> {
        self.increment(0, self.len() - 1)
    }

    /// Keep every `factor`-th grid point.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let partition = self.partition.coarsen(factor)?;
        let values = (0..self.len()).step_by(factor).flat_map(|i| self.point(i).iter().copied()).collect();
        Ok(Self { partition, dim: self.dim, values })
    }

    /// Multiply every value by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        Self { partition: self.partition.clone(), dim: self.dim, values: self.values.iter().map(|v| v * a).collect() }
    }

    /// CSV with header `t,comp0,comp1,...`, one row per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..self.dim).map(|k| format!("comp{k}")).collect();
        writeln!(out, "t,{}", header.join(","))?;
        for (i, t) in self.partition.times().iter().enumerate() {
            write!(out, "{t}")?;
            for v in self.point(i) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Little-endian `f64` rows `[t, comp0, comp1, ...]`, row-major, no header.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, t) in self.partition.times().iter().enumerate() {
            out.write_all(&t.to_le_bytes())?;
            for v in self.point(i) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// `E[(B((i+1)d) - B(id)) (B((i+k+1)d) - B((i+k)d))]`.
pub fn increment_autocovariance(params: &ModelParams, step: f64, lag: usize) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return domain(format!("step must be positive, got {step}"));
    }
    Ok(increment_autocov_unchecked(params.hurst, params.lambda, step, lag))
}

fn increment_autocov_unchecked(h: f64, lambda: f64, step: f64, lag: usize) -> f64 {
    let c = |k: usize| variance_unchecked(h, lambda, k as f64 * step);
    if lag == 0 {
        c(1)
    } else {
        0.5 * (c(lag + 1) + c(lag - 1) - 2.0 * c(lag))
    }
}

/// How a batch of paths was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Circulant,
    Cholesky,
}

/// Spectrum of the accepted circulant embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDiagnostics {
    /// Size of the circulant (`2m` for an embedding of `gamma(0..=m)`).
    pub size: usize,
    /// Eigenvalues before clipping.
    pub eigenvalues: Vec<f64>,
    /// Sum of the magnitudes of clipped negative eigenvalues.
    pub clipped_mass: f64,
    pub trace: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationMeta {
    pub method: Method,
    /// Set when circulant embedding failed and Cholesky was used instead.
    pub fell_back: bool,
    pub embedding: Option<EmbeddingDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub paths: Vec<SamplePath>,
    pub meta: SimulationMeta,
}

const NEG_EIG_REL: f64 = 1e-10;
const CLIP_MASS_REL: f64 = 1e-8;
const MAX_EMBED_FACTOR: usize = 16;

/// Circulant embedding of the increment sequence on a uniform grid, ready to sample.
pub struct CirculantEmbedding {
    n_steps: usize,
    dim: usize,
    /// `sqrt(max(eig, 0) / size)`.
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    partition: Partition,
    pub diagnostics: EmbeddingDiagnostics,
}

impl std::fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantEmbedding")
            .field("n_steps", &self.n_steps)
            .field("size", &self.diagnostics.size)
            .finish()
    }
}

impl CirculantEmbedding {
    /// Build the embedding, doubling the padding on failure. `Ok(None)` means
    /// no valid embedding up to size `16 N`.
    pub fn new(params: &ModelParams, n_steps: usize) -> Result<Option<Self>> {
        if n_steps == 0 {
            return domain("n_steps must be at least 1");
        }
        let step = params.horizon / n_steps as f64;
        let mut planner = FftPlanner::new();
        let mut m = n_steps;
        while 2 * m <= MAX_EMBED_FACTOR * n_steps {
            let size = 2 * m;
            let gamma: Vec<f64> =
                (0..=m).map(|k| increment_autocov_unchecked(params.hurst, params.lambda, step, k)).collect();
            let mut row: Vec<Complex<f64>> =
                (0..size).map(|j| Complex::new(if j <= m { gamma[j] } else { gamma[size - j] }, 0.0)).collect();
            let fft = planner.plan_fft_forward(size);
            fft.process(&mut row);
            let eigenvalues: Vec<f64> = row.iter().map(|c| c.re).collect();
            let max = eigenvalues.iter().copied().fold(f64::MIN, f64::max);
            let trace: f64 = eigenvalues.iter().map(|e| e.abs()).sum();
            let too_negative = eigenvalues.iter().any(|&e| e < -NEG_EIG_REL * max);
            let clipped_mass: f64 = eigenvalues.iter().filter(|&&e| e < 0.0).map(|e| -e).sum();
            if too_negative || clipped_mass > CLIP_MASS_REL * trace {
                m *= 2;
                continue;
            }
            let scale = eigenvalues.iter().map(|&e| (e.max(0.0) / size as f64).sqrt()).collect();
            return Ok(Some(Self {
                n_steps,
                dim: params.dim,
                scale,
                fft,
                partition: Partition::uniform(params.horizon, n_steps)?,
                diagnostics: EmbeddingDiagnostics { size, eigenvalues, clipped_mass, trace },
            }));
        }
        Ok(None)
    }

    /// One path; all randomness comes from `rng`.
    pub fn sample(&self, rng: RngSpec) -> SamplePath {
        let mut gen = rng.rng();
        let size = self.diagnostics.size;
        let n = self.n_steps;
        let mut values = vec![0.0; (n + 1) * self.dim];
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for pair in (0..self.dim).step_by(2) {
            for (b, s) in buf.iter_mut().zip(&self.scale) {
                let re: f64 = StandardNormal.sample(&mut gen);
                let im: f64 = StandardNormal.sample(&mut gen);
                *b = Complex::new(s * re, s * im);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            let mut acc = [0.0_f64; 2];
            for i in 0..n {
                acc[0] += buf[i].re;
                acc[1] += buf[i].im;
                values[(i + 1) * self.dim + pair] = acc[0];
                if pair + 1 < self.dim {
                    values[(i + 1) * self.dim + pair + 1] = acc[1];
                }
            }
        }
        SamplePath { partition: self.partition.clone(), dim: self.dim, values }
    }
}

/// Simulate `n_paths` paths on the uniform grid with `n_steps` intervals.
///
/// Path `p` draws from substream `rng.stream + p`, so batches are reproducible
/// regardless of thread count.
pub fn simulate_paths(params: &ModelParams, n_steps: usize, n_paths: usize, rng: RngSpec) -> Result<Simulation> {
    params.validate()?;
    if n_paths == 0 {
        return domain("n_paths must be at least 1");
    }
    match CirculantEmbedding::new(params, n_steps)? {
        Some(embedding) => {
            let paths = (0..n_paths as u64).into_par_iter().map(|p| embedding.sample(rng.substream(p))).collect();
            Ok(Simulation {
                paths,
                meta: SimulationMeta {
                    method: Method::Circulant,
                    fell_back: false,
                    embedding: Some(embedding.diagnostics),
                },
            })
        }
        None => {
            warn!("circulant embedding failed up to size {}N; using Cholesky", MAX_EMBED_FACTOR);
            let mut sim = simulate_paths_cholesky(params, n_steps, n_paths, rng)?;
            sim.meta.fell_back = true;
            Ok(sim)
        }
    }
}

/// Cholesky factor of a Gram matrix with a few rounds of diagonal jitter.
pub(crate) fn cholesky_with_jitter(gram: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = gram.nrows();
    let mean_diag = gram.trace() / n as f64;
    for jitter in [0.0, 1e-14, 1e-12, 1e-10] {
        let mut m = gram.clone();
        for i in 0..n {
            m[(i, i)] += jitter * mean_diag;
        }
        if let Some(c) = m.cholesky() {
            return Ok(c.unpack());
        }
    }
    Err(Error::NotPositiveDefinite { n })
}

/// Cholesky simulation on a uniform grid.
pub fn simulate_paths_cholesky(
    params: &ModelParams,
    n_steps: usize,
    n_paths: usize,
    rng: RngSpec,
) -> Result<Simulation> {
    if n_steps == 0 {
        return domain("n_steps must be at least 1");
    }
    simulate_paths_cholesky_on(params, &Partition::uniform(params.horizon, n_steps)?, n_paths, rng)
}

/// Cholesky simulation on an arbitrary partition. Costs `O(N^3)` once plus `O(N^2)` per path.
pub fn simulate_paths_cholesky_on(
    params: &ModelParams,
    partition: &Partition,
    n_paths: usize,
    rng: RngSpec,
) -> Result<Simulation> {
    params.validate()?;
    if n_paths == 0 {
        return domain("n_paths must be at least 1");
    }
    let times = &partition.times()[1..];
    let n = times.len();
    let gram = DMatrix::from_row_slice(n, n, &TfbmKernel::new(params).gram(times));
    let lower = cholesky_with_jitter(gram)?;
    let dim = params.dim;
    let paths = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut gen = rng.substream(p).rng();
            let mut values = vec![0.0; (n + 1) * dim];
            for k in 0..dim {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut gen));
                let x = &lower * z;
                for i in 0..n {
                    values[(i + 1) * dim + k] = x[i];
                }
            }
            SamplePath { partition: partition.clone(), dim, values }
        })
        .collect();
    Ok(Simulation { paths, meta: SimulationMeta { method: Method::Cholesky, fell_back: false, embedding: None } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::variance;

    fn params(h: f64, l: f64, dim: usize) -> ModelParams {
        ModelParams::new(h, l, dim, 1.0).unwrap()
    }

    #[test]
    fn autocovariance_lag_zero_and_domain() {
        let p = params(0.3, 1.0, 1);
        let g0 = increment_autocovariance(&p, 0.1, 0).unwrap();
        assert_eq!(g0, variance(&p, 0.1).unwrap());
        assert!(g0 > 0.0);
        assert!(increment_autocovariance(&p, 0.0, 1).is_err());
    }

    #[test]
    fn autocovariance_brownian_limit_vanishes() {
        let p = params(0.5, 1e-9, 1);
        for lag in 1..20 {
            assert!(increment_autocovariance(&p, 0.01, lag).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn autocovariance_decays_exponentially() {
        let p = params(0.4, 1.0, 1);
        let step = 0.5;
        let lag = (40.0 / step) as usize;
        for k in lag..lag + 20 {
            assert!(increment_autocovariance(&p, step, k).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn paths_start_at_zero_with_right_shape() {
        let sim = simulate_paths(&params(0.4, 1.0, 3), 16, 4, RngSpec::new(1)).unwrap();
        assert_eq!(sim.meta.method, Method::Circulant);
        for path in &sim.paths {
            assert_eq!(path.len(), 17);
            assert_eq!(path.dim(), 3);
            assert!(path.point(0).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn deterministic_given_spec() {
        let p = params(0.3, 2.0, 2);
        let a = simulate_paths(&p, 64, 5, RngSpec::new(9).with_stream(3)).unwrap();
        let b = simulate_paths(&p, 64, 5, RngSpec::new(9).with_stream(3)).unwrap();
        for (x, y) in a.paths.iter().zip(&b.paths) {
            assert_eq!(x.values(), y.values());
        }
        let c = simulate_paths_cholesky(&p, 16, 3, RngSpec::new(9)).unwrap();
        let d = simulate_paths_cholesky(&p, 16, 3, RngSpec::new(9)).unwrap();
        assert_eq!(c.paths[2].values(), d.paths[2].values());
        let e = simulate_paths(&p, 64, 5, RngSpec::new(10).with_stream(3)).unwrap();
        assert_ne!(a.paths[0].values(), e.paths[0].values());
    }

    #[test]
    fn embedding_is_valid_for_tempered_increments() {
        for (h, l) in [(0.3, 1.0), (0.6, 0.1), (0.9, 10.0), (0.1, 1.0)] {
            let e = CirculantEmbedding::new(&params(h, l, 1), 256).unwrap().unwrap();
            assert_eq!(e.diagnostics.size, 512);
            assert!(e.diagnostics.clipped_mass <= CLIP_MASS_REL * e.diagnostics.trace);
        }
    }

    #[test]
    fn single_step_variance() {
        let p = params(0.35, 1.0, 1);
        let n = 100_000;
        let sim = simulate_paths(&p, 1, n, RngSpec::new(42)).unwrap();
        let xs: Vec<f64> = sim.paths.iter().map(|q| q.value(1, 0)).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let target = variance(&p, 1.0).unwrap();
        // SE of the sample second moment of a Gaussian is sqrt(2/n) * sigma^2
        let se = (2.0 / n as f64).sqrt() * target;
        assert!((var - target).abs() < 3.0 * se, "{var} vs {target}");
    }

    #[test]
    fn coarsen_and_dumps() {
        let sim = simulate_paths(&params(0.4, 1.0, 2), 8, 1, RngSpec::new(3)).unwrap();
        let path = &sim.paths[0];
        let c = path.coarsen(4).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.point(2), path.point(8));
        let mut csv = Vec::new();
        path.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("t,comp0,comp1\n"));
        assert_eq!(text.lines().count(), 10);
        let mut bin = Vec::new();
        path.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 9 * 3 * 8);
        let v = f64::from_le_bytes(bin[(8 * 3 + 1) * 8..(8 * 3 + 2) * 8].try_into().unwrap());
        assert_eq!(v, path.value(8, 0));
    }

    #[test]
    fn sample_path_validation() {
        let part = Partition::uniform(1.0, 2).unwrap();
        assert!(SamplePath::new(part.clone(), 1, vec![0.0, 1.0]).is_err());
        assert!(SamplePath::new(part.clone(), 1, vec![1.0, 1.0, 2.0]).is_err());
        assert!(SamplePath::new(part, 1, vec![0.0, 1.0, 2.0]).is_ok());
    }
}
