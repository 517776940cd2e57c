//! Truncated signatures: Chen product, level moments and factorial decay.
use tfbm_rough::roughpath::{factorial_decay_check, signature_of_path, TruncatedSignature};
use tfbm_rough::simulate::{simulate_paths, RngSpec};
use tfbm_rough::ModelParams;

fn main() -> tfbm_rough::Result<()> {
    let params = ModelParams::new(0.45, 1.0, 2, 1.0)?;
    let path = simulate_paths(&params, 256, 1, RngSpec::new(5))?.paths.remove(0);
    let sig = signature_of_path(&path, 4)?;
    for k in 1..=4 {
        println!("level {k}: norm {:.4e}", sig.level_norm(k));
    }
    let s12 = sig.entry(&[0, 1]);
    let s21 = sig.entry(&[1, 0]);
    let x = path.total_increment();
    println!("S(12) + S(21) = {:.6}, x1 x2 = {:.6}", s12 + s21, x[0] * x[1]);

    let a = TruncatedSignature::segment(&[1.0, 0.0], 3);
    let b = TruncatedSignature::segment(&[0.0, 1.0], 3);
    println!("area of the L-shaped path: {}", 0.5 * (a.mul(&b).entry(&[0, 1]) - a.mul(&b).entry(&[1, 0])));

    let scalar = ModelParams::scalar(0.5, 1.0)?;
    let report = factorial_decay_check(&scalar, 6, 256, 500, RngSpec::new(6))?;
    for m in &report.levels {
        println!("k={} rms {:.4e} normalized {:.4}", m.level, m.rms, m.normalized);
    }
    println!("fitted C = {:.3}", report.fitted_constant);
    Ok(())
}
