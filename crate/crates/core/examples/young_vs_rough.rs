//! Riemann sums against compensated rough sums of int B dB for H > 1/2.
use tfbm_rough::rde::{rough_integral, young_integral, young_vs_rough_compare, PathItself};
use tfbm_rough::roughpath::lift_piecewise_linear;
use tfbm_rough::simulate::{simulate_paths, RngSpec};
use tfbm_rough::ModelParams;

fn main() -> tfbm_rough::Result<()> {
    let params = ModelParams::scalar(0.7, 1.0)?;
    let form = PathItself { dim: 1 };
    let path = simulate_paths(&params, 4096, 1, RngSpec::new(11))?.paths.remove(0);
    let b = path.total_increment()[0];
    println!(
        "Riemann {:.6}, rough {:.6}, B(1)^2/2 = {:.6}",
        young_integral(&form, &path),
        rough_integral(&form, &lift_piecewise_linear(&path)?)?,
        0.5 * b * b
    );
    let ladder: Vec<usize> = (6..=12).map(|k| 1 << k).collect();
    let r = young_vs_rough_compare(&params, &form, &ladder, 200, RngSpec::new(12))?;
    for (n, d) in r.resolutions.iter().zip(&r.mean_abs_diff) {
        println!("  N={n:<5} mean |Riemann - rough| {d:.4e}");
    }
    println!("  rate {:.3}, monotone {}", r.observed_rate, r.monotone_decreasing());
    Ok(())
}
