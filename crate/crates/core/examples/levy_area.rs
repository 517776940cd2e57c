//! Piecewise-linear level-2 lift of a 2-d path: Chen's relation, Levy area and
//! nested-grid refinement errors.
use tfbm_rough::roughpath::{chen_compose, lift_piecewise_linear, refinement_errors};
use tfbm_rough::simulate::{simulate_paths, RngSpec};
use tfbm_rough::ModelParams;

fn main() -> tfbm_rough::Result<()> {
    let params = ModelParams::new(0.4, 1.0, 2, 1.0)?;
    let path = simulate_paths(&params, 512, 1, RngSpec::new(3))?.paths.remove(0);
    let lift = lift_piecewise_linear(&path)?;
    let whole = lift.level2(0, 512)?;
    let chen = chen_compose(&lift, 0, 200, 512)?;
    println!("level 2 over [0,1]:\n{whole}");
    println!("Chen defect {:.2e}", (chen - &whole).norm());
    println!("Levy area {:.6}", lift.levy_area(0, 512)?[(0, 1)]);

    let ns: Vec<usize> = (6..=11).map(|k| 1 << k).collect();
    for e in refinement_errors(&params, &ns, 200, RngSpec::new(4))? {
        println!("N={:<5} e(N) = {:.4e} +- {:.1e}", e.n, e.error, e.stderr);
    }
    Ok(())
}
