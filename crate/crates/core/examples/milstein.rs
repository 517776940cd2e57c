//! Milstein scheme for rough differential equations: a linear equation with a
//! closed-form solution and a nonlinear pendulum driven by 2-d noise.
use tfbm_rough::rde::{exact_scalar_linear, jacobian_check, milstein_solve, strong_error, FnField, ScalarLinear};
use tfbm_rough::roughpath::lift_piecewise_linear;
use tfbm_rough::simulate::{simulate_paths, RngSpec};
use tfbm_rough::ModelParams;

fn main() -> tfbm_rough::Result<()> {
    let params = ModelParams::scalar(0.4, 1.0)?;
    let path = simulate_paths(&params, 1024, 1, RngSpec::new(7))?.paths.remove(0);
    let traj = milstein_solve(&ScalarLinear, &[1.0], &lift_piecewise_linear(&path)?)?;
    println!("dY = Y dB: Milstein {:.6}, exact {:.6}", traj.terminal()[0], exact_scalar_linear(&path)?);

    let ladder: Vec<usize> = (4..=10).map(|k| 1 << k).collect();
    let r = strong_error(&params, &ScalarLinear, &[1.0], &ladder, 300, RngSpec::new(8))?;
    for (n, e) in r.resolutions.iter().zip(&r.errors) {
        println!("  n={n:<5} error {e:.4e}");
    }
    println!("  slope {:.3} +- {:.3}", r.slope, r.slope_stderr);

    // y = (angle, velocity); noise 0 drives the velocity, noise 1 the angle
    let pendulum = FnField::new(
        2,
        2,
        |y, out| {
            out.copy_from_slice(&[0.0, 1.0, -y[0].sin(), 0.0]);
        },
        |y, out| {
            out.fill(0.0);
            out[4] = -y[0].cos(); // d f_{1,0} / d y_0
        },
    );
    println!("pendulum Jacobian error {:.2e}", jacobian_check(&pendulum, 20, 2.0, RngSpec::new(9)));
    let noise = ModelParams::new(0.6, 0.5, 2, 1.0)?;
    let path = simulate_paths(&noise, 1000, 1, RngSpec::new(10))?.paths.remove(0);
    let traj = milstein_solve(&pendulum, &[0.5, 0.0], &lift_piecewise_linear(&path)?)?;
    for k in (0..=1000).step_by(250) {
        println!("  t={:.2} y={:?}", traj.times[k], traj.state(k));
    }
    Ok(())
}
