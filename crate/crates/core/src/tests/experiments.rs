use std::fs;
use std::path::Path;

use crate::experiments::{self, ConfigOverrides, Experiment, ExperimentConfig, Report};

fn small(experiment: Experiment, out: &Path) -> ExperimentConfig {
    let o = match experiment {
        Experiment::LevyConvergence => ConfigOverrides {
            hurst: Some(vec![0.4]),
            lambda: Some(vec![1.0, 10.0]),
            resolutions: Some(vec![8, 16, 32, 64]),
            n_mc: Some(20),
            ..Default::default()
        },
        Experiment::MilsteinConvergence => ConfigOverrides {
            hurst: Some(vec![0.6]),
            resolutions: Some(vec![8, 16, 32, 64]),
            n_mc: Some(20),
            ..Default::default()
        },
        Experiment::SignatureFeatures => {
            ConfigOverrides { n_mc: Some(40), steps: Some(64), depth: Some(3), ..Default::default() }
        }
        Experiment::CovarianceCheck => ConfigOverrides {
            hurst: Some(vec![0.2, 0.6]),
            lambda: Some(vec![1.0]),
            max_depth: Some(5),
            ..Default::default()
        },
        Experiment::RhoVariation => ConfigOverrides { max_depth: Some(6), ..Default::default() },
        Experiment::Simulate => ConfigOverrides { steps: Some(32), n_mc: Some(2), ..Default::default() },
    };
    let o = ConfigOverrides { out: Some(out.to_path_buf()), ..o };
    ExperimentConfig::resolve(experiment, None, o).unwrap()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

#[test]
fn every_experiment_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for e in Experiment::ALL {
        experiments::run(&small(e, &a.path().join(e.name()))).unwrap();
        experiments::run(&small(e, &b.path().join(e.name()))).unwrap();
        for entry in fs::read_dir(a.path().join(e.name())).unwrap() {
            let entry = entry.unwrap();
            let twin = b.path().join(e.name()).join(entry.file_name());
            let (x, y) = (fs::read(entry.path()).unwrap(), fs::read(twin).unwrap());
            // the echoed output directory differs; everything else must match
            let strip = |v: Vec<u8>| -> Vec<String> {
                String::from_utf8_lossy(&v).lines().filter(|l| !l.starts_with("# out =")).map(String::from).collect()
            };
            if entry.path().extension().is_some_and(|x| x == "bin") {
                assert_eq!(x, y, "{:?}", entry.path());
            } else {
                assert_eq!(strip(x), strip(y), "{:?}", entry.path());
            }
        }
    }
}

#[test]
fn csvs_carry_config_echo_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (Experiment::LevyConvergence, "levy_convergence.csv", "H,lambda,N,error,stderr"),
        (Experiment::MilsteinConvergence, "milstein_convergence.csv", "H,lambda,n,error,stderr"),
        (Experiment::SignatureFeatures, "signature_features.csv", "H,lambda,path_id,S1,S2"),
        (Experiment::CovarianceCheck, "covariance_check.csv", "H,lambda,pairs,violations,max_gap,min_slack"),
        (Experiment::RhoVariation, "rho_variation.csv", "H,lambda,rho,depth,value,running_max,bound"),
    ];
    for (e, file, header) in cases {
        let cfg = small(e, dir.path());
        experiments::run(&cfg).unwrap();
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        let echo = format!("# experiment = \"{}\"", e.name());
        assert!(text.starts_with(&echo), "{file}");
        assert!(text.contains("# seed = "));
        assert_eq!(data_lines(&dir.path().join(file))[0], header);
    }
}

#[test]
fn milstein_dumps_trajectory_and_approximation() {
    let dir = tempfile::tempdir().unwrap();
    let r = experiments::run_milstein_convergence(&small(Experiment::MilsteinConvergence, dir.path())).unwrap();
    assert_eq!(r.trajectory_rows, 101);
    assert_eq!(data_lines(&dir.path().join("milstein_approx.csv")).len(), 1 + 101);
    assert_eq!(data_lines(&dir.path().join("milstein_path.csv")).len(), 1 + 1001);
    let slopes = data_lines(&dir.path().join("milstein_slopes.csv"));
    assert_eq!(slopes.len(), 2);
}

#[test]
fn signature_rows_satisfy_geometric_identity() {
    let dir = tempfile::tempdir().unwrap();
    let r = experiments::run_signature_features(&small(Experiment::SignatureFeatures, dir.path())).unwrap();
    for line in data_lines(&dir.path().join("signature_features.csv")).iter().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[4] - 0.5 * f[3] * f[3]).abs() < 1e-9 * (1.0 + f[4].abs()));
    }
    for g in &r.groups {
        assert!(g.mean_ok(), "{g:?}");
        assert!(g.identity_residual < 1e-12);
    }
    let levels = data_lines(&dir.path().join("signature_levels.csv"));
    assert_eq!(levels[0], "H,lambda,path_id,1:0,2:0:0,3:0:0:0");
    assert_eq!(levels.len(), 1 + 3 * 40);
    assert_eq!(data_lines(&dir.path().join("signature_moments.csv")).len(), 1 + 3);
}

#[test]
fn lift_experiments_reject_small_hurst() {
    let o = || ConfigOverrides { hurst: Some(vec![0.25]), ..Default::default() };
    for e in [Experiment::LevyConvergence, Experiment::MilsteinConvergence, Experiment::SignatureFeatures] {
        assert!(ExperimentConfig::resolve(e, None, o()).is_err(), "{}", e.name());
    }
    let dir = tempfile::tempdir().unwrap();
    let r = experiments::run(&small(Experiment::CovarianceCheck, dir.path())).unwrap();
    match r {
        Report::Covariance(c) => assert_eq!(c.total_violations(), 0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn simulate_writes_matching_csv_and_binary() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Simulate, dir.path());
    cfg.dim = 2;
    experiments::run(&cfg).unwrap();
    let csv = data_lines(&dir.path().join("path_H0.4_lambda1_1.csv"));
    assert_eq!(csv[0], "t,comp0,comp1");
    assert_eq!(csv.len(), 1 + 33);
    let bin = fs::read(dir.path().join("path_H0.4_lambda1_1.bin")).unwrap();
    assert_eq!(bin.len(), 33 * 3 * 8);
    let row: Vec<f64> = csv[5].split(',').map(|x| x.parse().unwrap()).collect();
    for (k, v) in row.iter().enumerate() {
        let off = (4 * 3 + k) * 8;
        let b = f64::from_le_bytes(bin[off..off + 8].try_into().unwrap());
        assert_eq!(b, *v);
    }
}
