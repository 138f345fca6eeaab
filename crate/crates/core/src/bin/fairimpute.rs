use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairimpute::harness::config::ExperimentConfig;
use fairimpute::harness::{
    report::audit_signs, run_csv_audit, run_region_scan, run_simulation, run_validation_for,
    ReportRow,
};

#[derive(Parser)]
#[command(
    version,
    about = "Group-specific missingness, imputation and fairness audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic cohorts under each missingness scenario and imputer.
    Simulate(Common),
    /// Audit of an incomplete CSV cohort.
    AuditCsv(Common),
    /// Closed-form gap surface over both groups' correlations.
    RegionScan(Common),
    /// Monte Carlo and predicate checks of the closed forms.
    ValidateTheorems(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file. Simulation, region scan and validation fall back
    /// to reference settings without one.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
}

impl Common {
    fn load(&self, required: bool) -> fairimpute::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None if required => {
                return Err(fairimpute::Error::Config("--config is required".into()))
            }
            None => ExperimentConfig::reference_simulation(),
        };
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(r) = self.repetitions {
            config.repetitions = r;
        }
        Ok(config)
    }
}

fn report_errors(rows: &[ReportRow]) -> ExitCode {
    let mut failed = false;
    for r in rows.iter().filter(|r| r.is_error() && r.group == "overall") {
        eprintln!("{}/{}/{}: {}", r.scenario, r.imputer, r.metric, r.status);
        failed = true;
    }
    if let Err(e) = audit_signs(rows) {
        eprintln!("{e}");
        failed = true;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> fairimpute::Result<ExitCode> {
    let common = match &cli.command {
        Command::Simulate(c)
        | Command::AuditCsv(c)
        | Command::RegionScan(c)
        | Command::ValidateTheorems(c) => c,
    };
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| fairimpute::Error::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Simulate(c) => {
            let config = c.load(false)?;
            let output = run_simulation(&config)?;
            output.write(&config.output_dir)?;
            println!("wrote {}", config.output_dir.join("report.csv").display());
            Ok(report_errors(&output.report.rows))
        }
        Command::AuditCsv(c) => {
            let config = c.load(true)?;
            let output = run_csv_audit(&config)?;
            output.write(&config.output_dir)?;
            println!("wrote {}", config.output_dir.join("report.csv").display());
            Ok(report_errors(&output.report.rows))
        }
        Command::RegionScan(c) => {
            let config = c.load(false)?;
            let (cells, path) = run_region_scan(&config, &config.output_dir)?;
            let infeasible = cells.iter().filter(|c| !c.feasible).count();
            println!(
                "wrote {} ({} cells, {infeasible} infeasible)",
                path.display(),
                cells.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateTheorems(c) => {
            let config = c.load(false)?;
            let output = run_validation_for(&config)?;
            output.write(&config.output_dir)?;
            println!("{}", serde_json::to_string_pretty(&output.summary)?);
            Ok(if output.summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
