//! Exact simulation by circulant embedding, checked against Cholesky, and
//! dumped as CSV and raw little-endian f64.
use std::fs::File;
use std::io::BufWriter;

use tfbm_rough::covariance::variance;
use tfbm_rough::simulate::{simulate_paths, simulate_paths_cholesky, RngSpec};
use tfbm_rough::stats::mean_with_se;
use tfbm_rough::ModelParams;

fn main() -> tfbm_rough::Result<()> {
    let params = ModelParams::new(0.3, 2.0, 2, 1.0)?;
    let fft = simulate_paths(&params, 256, 2000, RngSpec::new(1))?;
    let chol = simulate_paths_cholesky(&params, 256, 2000, RngSpec::new(2))?;
    println!("method {:?}, fell back: {}", fft.meta.method, fft.meta.fell_back);
    let want = variance(&params, 1.0)?;
    for (name, sim) in [("circulant", &fft), ("cholesky", &chol)] {
        let sq: Vec<f64> = sim.paths.iter().map(|p| p.value(256, 0).powi(2)).collect();
        let (m, se) = mean_with_se(&sq);
        println!("{name:>9}: Var B(1) = {m:.4} +- {se:.4} (exact {want:.4})");
    }
    let dir = std::env::temp_dir();
    let path = &fft.paths[0];
    path.write_csv(BufWriter::new(File::create(dir.join("tfbm_path.csv"))?))?;
    path.write_binary(BufWriter::new(File::create(dir.join("tfbm_path.bin"))?))?;
    println!("wrote {}/tfbm_path.{{csv,bin}}", dir.display());
    Ok(())
}
