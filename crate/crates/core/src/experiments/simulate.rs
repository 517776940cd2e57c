use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use super::{cells, create_csv, ExperimentConfig};
use crate::error::Result;
use crate::params::ModelParams;
use crate::simulate::{simulate_paths, SimulationMeta};

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub files: Vec<PathBuf>,
    pub meta: Vec<(f64, f64, SimulationMeta)>,
}

impl fmt::Display for SimulateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "simulate: {} files", self.files.len())?;
        for (h, l, m) in &self.meta {
            writeln!(f, "  H={h:<4} lambda={l:<5} method {:?} fallback {}", m.method, m.fell_back)?;
        }
        Ok(())
    }
}

/// For every `(H, lambda)` and path `p`, writes `path_H{H}_lambda{lambda}_{p}.csv`
/// (`t,comp0,...`) and the same rows as raw little-endian `f64` in a `.bin` twin.
pub fn run_simulate(config: &ExperimentConfig) -> Result<SimulateReport> {
    config.validate()?;
    let mut files = Vec::new();
    let mut meta = Vec::new();
    for c in cells(config) {
        let (h, l) = (c.hurst, c.lambda);
        let params = ModelParams::new(h, l, config.dim, config.horizon)?;
        let sim = simulate_paths(&params, config.steps, config.n_mc, c.rng)?;
        for (p, path) in sim.paths.iter().enumerate() {
            let stem = format!("path_H{h}_lambda{l}_{p}");
            let mut w = create_csv(config, &format!("{stem}.csv"))?;
            path.write_csv(&mut w)?;
            w.flush()?;
            let bin = config.out.join(format!("{stem}.bin"));
            let mut b = BufWriter::new(File::create(&bin)?);
            path.write_binary(&mut b)?;
            b.flush()?;
            files.push(config.out.join(format!("{stem}.csv")));
            files.push(bin);
        }
        meta.push((h, l, sim.meta));
    }
    Ok(SimulateReport { files, meta })
}
