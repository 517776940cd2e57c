//! Distance between the tempered and untempered covariances against the
//! polynomial-plus-exponential envelope, on a uniform grid.
use tfbm_rough::covariance::{decomposition_error_bounds, verify_decomposition};
use tfbm_rough::{ModelParams, Partition};

fn main() -> tfbm_rough::Result<()> {
    let grid = Partition::uniform(1.0, 63)?;
    for lambda in [0.1, 1.0, 10.0] {
        let params = ModelParams::scalar(0.4, lambda)?;
        let r = verify_decomposition(&params, &grid);
        let (poly, exp) = decomposition_error_bounds(&params, 0.5, 1.0)?;
        println!(
            "lambda={lambda:<5} pairs {} max gap {:.3e} min slack {:+.3e} violations {}  bound(0.5,1) = {poly:.3e} + {exp:.3e}",
            r.pairs,
            r.max_gap,
            r.min_slack,
            r.violations.len()
        );
    }
    Ok(())
}
