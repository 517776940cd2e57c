//! Acceptance suite. Runs every criterion at full scale, prints one
//! `PASS`/`FAIL` line each, and exits non-zero if any failed.

use std::process::ExitCode;
use std::time::Instant;

use tfbm_rough::covariance::{covariance, verify_decomposition};
use tfbm_rough::experiments::{
    run_levy_convergence, run_milstein_convergence, run_rho_variation, ConfigOverrides, Experiment, ExperimentConfig,
};
use tfbm_rough::rde::{young_vs_rough_compare, PathItself};
use tfbm_rough::roughpath::{chen_compose, level_moment_scaling, lift_piecewise_linear, signature_of_path};
use tfbm_rough::simulate::{simulate_paths, simulate_paths_cholesky, RngSpec, SamplePath};
use tfbm_rough::stats::ks_two_sample;
use tfbm_rough::{ModelParams, Partition};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn config(experiment: Experiment, o: ConfigOverrides, out: &std::path::Path) -> ExperimentConfig {
    let o = ConfigOverrides { out: Some(out.to_path_buf()), ..o };
    ExperimentConfig::resolve(experiment, None, o).expect("valid configuration")
}

fn ladder(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1 << k).collect()
}

fn levy_rate(out: &std::path::Path) -> Outcome {
    let cfg = config(
        Experiment::LevyConvergence,
        ConfigOverrides {
            hurst: Some(vec![0.3, 0.4, 0.6]),
            lambda: Some(vec![1.0]),
            resolutions: Some(ladder(6, 12)),
            n_mc: Some(1000),
            ..Default::default()
        },
        out,
    );
    let r = run_levy_convergence(&cfg).unwrap();
    let parts: Vec<String> =
        r.fits.iter().map(|f| format!("H={} slope {:+.3} vs {:+.2}", f.hurst, f.slope, f.expected)).collect();
    outcome(r.fits.iter().all(|f| (f.slope - f.expected).abs() <= 0.15), parts.join("; "))
}

fn lambda_ordering(out: &std::path::Path) -> Outcome {
    let cfg = config(
        Experiment::LevyConvergence,
        ConfigOverrides {
            hurst: Some(vec![0.4]),
            lambda: Some(vec![0.1, 1.0, 10.0]),
            resolutions: Some(ladder(6, 12)),
            n_mc: Some(1000),
            ..Default::default()
        },
        out,
    );
    let r = run_levy_convergence(&cfg).unwrap();
    let mut bad = Vec::new();
    for n in ladder(7, 12) {
        let e = |l: f64| r.rows.iter().find(|x| x.lambda == l && x.n == n).unwrap().error;
        let (a, b, c) = (e(10.0), e(1.0), e(0.1));
        if !(a < b && b < c) {
            bad.push(format!("N={n}: {a:.5e} {b:.5e} {c:.5e}"));
        }
    }
    let ok = r.lambda_ordering(0.4, 128) == Some(true) && bad.is_empty();
    outcome(ok, if bad.is_empty() { "strict at every N".into() } else { format!("order broken at {}", bad.join("; ")) })
}

fn milstein_rate(out: &std::path::Path) -> Outcome {
    let cfg = config(
        Experiment::MilsteinConvergence,
        ConfigOverrides {
            hurst: Some(vec![0.3, 0.7]),
            lambda: Some(vec![1.0]),
            resolutions: Some(ladder(4, 10)),
            n_mc: Some(1000),
            ..Default::default()
        },
        out,
    );
    let r = run_milstein_convergence(&cfg).unwrap();
    let parts: Vec<String> =
        r.fits.iter().map(|f| format!("H={} slope {:+.3} vs {:+.2}", f.hurst, f.slope, f.expected)).collect();
    outcome(r.fits.iter().all(|f| (f.slope - f.expected).abs() <= 0.15), parts.join("; "))
}

fn decomposition() -> Outcome {
    let grid = Partition::uniform(1.0, 63).unwrap();
    let mut total = 0;
    let mut parts = Vec::new();
    for h in [0.3, 0.4, 0.6, 0.7] {
        for l in [0.1, 1.0, 10.0] {
            let r = verify_decomposition(&ModelParams::scalar(h, l).unwrap(), &grid);
            assert_eq!(r.pairs, 64 * 64);
            if !r.passed() {
                parts.push(format!("H={h} lambda={l}: {}", r.violations.len()));
            }
            total += r.violations.len();
        }
    }
    outcome(total == 0, format!("{total} violations {}", parts.join(", ")))
}

fn rho_variation(out: &std::path::Path) -> Outcome {
    let cfg = config(
        Experiment::RhoVariation,
        ConfigOverrides {
            hurst: Some(vec![0.3, 0.5, 0.7]),
            lambda: Some(vec![1.0]),
            max_depth: Some(10),
            ..Default::default()
        },
        out,
    );
    let r = run_rho_variation(&cfg).unwrap();
    let parts: Vec<String> =
        r.summaries.iter().map(|s| format!("H={} growth {:+.4}%", s.hurst, 100.0 * s.relative_growth)).collect();
    outcome(r.summaries.iter().all(|s| s.relative_growth.abs() < 0.02), parts.join("; "))
}

fn shoelace(path: &SamplePath) -> f64 {
    (0..path.len() - 1)
        .map(|k| 0.5 * (path.value(k, 0) * path.value(k + 1, 1) - path.value(k + 1, 0) * path.value(k, 1)))
        .sum()
}

fn chen_suite() -> Outcome {
    let params = ModelParams::new(0.4, 1.0, 2, 1.0).unwrap();
    let sim = simulate_paths(&params, 64, 100, RngSpec::new(101)).unwrap();
    let (mut chen, mut sym, mut area) = (0.0_f64, 0.0_f64, 0.0_f64);
    for path in &sim.paths {
        let lift = lift_piecewise_linear(path).unwrap();
        let n = path.len() - 1;
        for (i, k, j) in [(0, 32, n), (3, 17, 50), (10, 11, 12), (0, 1, n), (20, 40, 60)] {
            let direct = lift.level2(i, j).unwrap();
            let composed = chen_compose(&lift, i, k, j).unwrap();
            chen = chen.max((composed - &direct).norm() / direct.norm().max(1e-300));
        }
        for (i, j) in [(0, n), (5, 9), (13, 64)] {
            let b = lift.level2(i, j).unwrap();
            let dx = nalgebra::DVector::from_vec(lift.increment(i, j).unwrap());
            let half = 0.5 * &dx * dx.transpose();
            sym = sym.max((0.5 * (&b + b.transpose()) - &half).norm() / half.norm().max(1e-300));
        }
        let a = lift.levy_area(0, n).unwrap()[(0, 1)];
        let s = shoelace(path);
        area = area.max((a - s).abs() / s.abs().max(1.0));
    }
    let scalar = ModelParams::new(0.4, 1.0, 1, 1.0).unwrap();
    let one = simulate_paths(&scalar, 64, 100, RngSpec::new(102)).unwrap();
    let mut ident = 0.0_f64;
    for path in &one.paths {
        let lift = lift_piecewise_linear(path).unwrap();
        let bt = path.value(64, 0);
        let half = 0.5 * bt * bt;
        ident = ident.max((lift.level2(0, 64).unwrap()[(0, 0)] - half).abs() / half.max(1.0));
    }
    let ok = chen < 1e-12 && sym < 1e-12 && area < 1e-12 && ident < 1e-12;
    outcome(ok, format!("chen {chen:.1e}, sym {sym:.1e}, area {area:.1e}, dim-1 identity {ident:.1e}"))
}

fn simulation_exactness() -> Outcome {
    let params = ModelParams::scalar(0.35, 1.0).unwrap();
    let m = 20_000;
    let sim = simulate_paths(&params, 16, m, RngSpec::new(7)).unwrap();
    let mut worst = 0.0_f64;
    for i in 1..=16 {
        for j in i..=16 {
            let prods: Vec<f64> = sim.paths.iter().map(|p| p.value(i, 0) * p.value(j, 0)).collect();
            let (mean, se) = tfbm_rough::stats::mean_with_se(&prods);
            let exact = covariance(&params, i as f64 / 16.0, j as f64 / 16.0).unwrap();
            worst = worst.max((mean - exact).abs() / se);
        }
    }
    let chol = simulate_paths_cholesky(&params, 16, 2000, RngSpec::new(8)).unwrap();
    let a: Vec<f64> = sim.paths.iter().take(2000).map(|p| p.value(16, 0)).collect();
    let b: Vec<f64> = chol.paths.iter().map(|p| p.value(16, 0)).collect();
    let (d, p) = ks_two_sample(&a, &b);
    outcome(worst <= 4.0 && p >= 0.01, format!("max |gram error| {worst:.2} SE; KS D={d:.4} p={p:.3}"))
}

fn signature_properties() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for h in [0.3, 0.5, 0.7] {
        let params = ModelParams::new(h, 1.0, 2, 1.0).unwrap();
        let fits = level_moment_scaling(&params, &[1, 2], &[0.25, 0.5, 1.0], 256, 2000, RngSpec::new(31)).unwrap();
        for f in fits {
            ok &= (f.exponent - f.expected).abs() <= 0.1;
            parts.push(format!("H={h} k={} {:.3} vs {:.2}", f.level, f.exponent, f.expected));
        }
    }
    let scalar = ModelParams::scalar(0.4, 1.0).unwrap();
    let mut level_err = 0.0_f64;
    for path in simulate_paths(&scalar, 32, 20, RngSpec::new(32)).unwrap().paths {
        let s = signature_of_path(&path, 6).unwrap();
        let b = path.value(32, 0);
        let mut fact = 1.0;
        for k in 1..=6 {
            fact *= k as f64;
            let want = b.powi(k as i32) / fact;
            level_err = level_err.max((s.level(k)[0] - want).abs() / want.abs().max(1.0));
        }
    }
    ok &= level_err < 1e-12;
    let poly = {
        let part = Partition::new(vec![0.0, 0.2, 0.5, 0.6, 1.0]).unwrap();
        SamplePath::from_points(
            part,
            &[vec![0.0, 0.0], vec![0.4, -0.2], vec![0.1, 0.7], vec![-0.3, 0.5], vec![0.6, 0.1]],
        )
        .unwrap()
    };
    let s = signature_of_path(&poly, 3).unwrap();
    let d: Vec<Vec<f64>> = (0..4).map(|k| poly.increment(k, k + 1)).collect();
    let mut l3 = 0.0_f64;
    for w in 0..8 {
        let (a, b, c) = (w >> 2 & 1, w >> 1 & 1, w & 1);
        let mut want = 0.0;
        for i in 0..4 {
            want += d[i][a] * d[i][b] * d[i][c] / 6.0;
            for k in i + 1..4 {
                want += 0.5 * d[i][a] * d[i][b] * d[k][c] + 0.5 * d[i][a] * d[k][b] * d[k][c];
                for j in i + 1..k {
                    want += d[i][a] * d[j][b] * d[k][c];
                }
            }
        }
        l3 = l3.max((s.entry(&[a, b, c]) - want).abs());
    }
    ok &= l3 < 1e-10;
    outcome(ok, format!("{}; dim-1 levels {level_err:.1e}; level-3 oracle {l3:.1e}", parts.join(", ")))
}

fn young_consistency() -> Outcome {
    let params = ModelParams::scalar(0.7, 1.0).unwrap();
    let r = young_vs_rough_compare(&params, &PathItself { dim: 1 }, &ladder(4, 12), 100, RngSpec::new(41)).unwrap();
    let seq: Vec<String> = r.mean_abs_diff.iter().map(|d| format!("{d:.2e}")).collect();
    let ok = r.monotone_decreasing() && r.final_diff() < 1e-3;
    outcome(
        ok,
        format!(
            "monotone {}, final {:.3e}, rate {:.3}, [{}]",
            r.monotone_decreasing(),
            r.final_diff(),
            r.observed_rate,
            seq.join(" ")
        ),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let sub = |name: &str| dir.path().join(name);
    let criteria: Vec<Criterion> = vec![
        ("levy-area-rate", Box::new(|| levy_rate(&sub("levy")))),
        ("lambda-prefactor-ordering", Box::new(|| lambda_ordering(&sub("levy_lambda")))),
        ("milstein-rate", Box::new(|| milstein_rate(&sub("milstein")))),
        ("covariance-decomposition", Box::new(decomposition)),
        ("rho-variation-boundedness", Box::new(|| rho_variation(&sub("rho")))),
        ("chen-geometric-suite", Box::new(chen_suite)),
        ("simulation-exactness", Box::new(simulation_exactness)),
        ("signature-properties", Box::new(signature_properties)),
        ("young-consistency", Box::new(young_consistency)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let start = Instant::now();
        let o = run();
        println!(
            "{} {name} ({:.1}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
