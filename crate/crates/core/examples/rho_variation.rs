//! Dyadic rho-variation sweep of the covariance and the three-term bound.
use tfbm_rough::covariance::{dyadic_rho_variation_sweep, rho_variation_bound, TfbmKernel};
use tfbm_rough::experiments::sweep_rho;
use tfbm_rough::ModelParams;

fn main() -> tfbm_rough::Result<()> {
    for h in [0.3, 0.5, 0.7] {
        let params = ModelParams::scalar(h, 1.0)?;
        let rho = sweep_rho(h);
        let rows = dyadic_rho_variation_sweep(&TfbmKernel::new(&params), 1.0, rho, 9)?;
        let bound = rho_variation_bound(&params, rho, 9)?;
        let values: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.value)).collect();
        println!("H={h} rho={rho:.3}: {}", values.join(" "));
        println!("  bound {:.4} = {:.4} + {:.4} + {:.4}", bound.total, bound.fbm_part, bound.poly_part, bound.exp_part);
    }
    Ok(())
}
