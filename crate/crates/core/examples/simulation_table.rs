//! Runs the reference simulation and prints marginalised reconstruction
//! error and AUC per scenario and imputer.
//!
//! `cargo run --release --example simulation_table [repetitions] [config.toml]`

use std::path::Path;

use fairimpute::harness::{run_simulation, ExperimentConfig};

fn main() -> fairimpute::Result<()> {
    let mut args = std::env::args().skip(1);
    let repetitions: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(10);
    let mut config = match args.next() {
        Some(path) => ExperimentConfig::load(Path::new(&path))?,
        None => ExperimentConfig::reference_simulation(),
    };
    config.repetitions = repetitions;

    let start = std::time::Instant::now();
    let output = run_simulation(&config)?;
    output.write(&config.output_dir)?;

    println!("{} repetitions in {:.1?}", repetitions, start.elapsed());
    println!(
        "{:<4} {:<24} {:>16} {:>16} {:>16}",
        "", "imputer", "recon (marg)", "recon gap", "auc (marg)"
    );
    for scenario in &config.scenarios {
        for imputer in config.imputers.iter().map(|i| i.label()) {
            let cell = |metric: &str, group: &str| {
                output
                    .report
                    .find(scenario.scenario.name(), &imputer, metric, group)
                    .and_then(|r| r.mean.zip(r.std))
                    .map_or("-".to_string(), |(m, s)| format!("{m:.3} ({s:.3})"))
            };
            println!(
                "{:<4} {:<24} {:>16} {:>16} {:>16}",
                scenario.scenario.name(),
                imputer,
                cell("reconstruction_error", "marginalised"),
                cell("reconstruction_error", "gap"),
                cell("auc", "marginalised"),
            );
        }
    }
    println!("report written to {}", config.output_dir.display());
    Ok(())
}
