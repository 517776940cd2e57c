//! Variance of tempered fBm by series, Bessel form and quadrature, plus a
//! small covariance matrix.
use tfbm_rough::covariance::{covariance, fbm_covariance, variance, variance_bessel, variance_quadrature};
use tfbm_rough::ModelParams;

fn main() -> tfbm_rough::Result<()> {
    let params = ModelParams::scalar(0.35, 1.5)?;
    println!("{:>6} {:>14} {:>14} {:>14}", "t", "variance", "bessel", "quadrature");
    for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
        println!(
            "{t:>6} {:>14.10} {:>14.10} {:>14.10}",
            variance(&params, t)?,
            variance_bessel(&params, t)?,
            variance_quadrature(&params, t)?
        );
    }
    let times = [0.25, 0.5, 0.75, 1.0];
    println!("\ncovariance vs fBm on {times:?}");
    for &s in &times {
        let row: Vec<String> = times
            .iter()
            .map(|&t| format!("{:.4}/{:.4}", covariance(&params, s, t).unwrap(), fbm_covariance(0.35, s, t).unwrap()))
            .collect();
        println!("  {}", row.join("  "));
    }
    Ok(())
}
