//! Resolve an experiment from TOML plus overrides and run it programmatically.
use tfbm_rough::experiments::{run, ConfigOverrides, Experiment, ExperimentConfig};

fn main() -> tfbm_rough::Result<()> {
    let file = ConfigOverrides::from_toml_str(
        r#"
        experiment = "levy-convergence"
        hurst = [0.35, 0.6]
        lambda = [1.0]
        resolutions = [64, 128, 256, 512]
        n_mc = 100
        "#,
    )?;
    let flags =
        ConfigOverrides { seed: Some(7), out: Some(std::env::temp_dir().join("tfbm_levy")), ..Default::default() };
    let config = ExperimentConfig::resolve(Experiment::LevyConvergence, Some(file), flags)?;
    print!("{}", config.echo());
    let report = run(&config)?;
    print!("{report}");
    println!("outputs in {}", config.out.display());
    Ok(())
}
