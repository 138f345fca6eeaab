//! Generates a stand-in clinical CSV, audits it with every imputer and prints
//! overall AUC plus the FNR gap at each capacity.
//!
//! `cargo run --release --example standin_audit [out_dir]`

use std::path::PathBuf;

use fairimpute::harness::standin::{
    generate_standin, standin_audit_config, write_standin_csv, StandinSpec,
};
use fairimpute::harness::{report::audit_signs, run_csv_audit};

fn main() -> fairimpute::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "out/standin".into()),
    );
    let csv = out.join("standin.csv");
    write_standin_csv(&generate_standin(&StandinSpec::default())?, &csv)?;

    let config = standin_audit_config(csv, 7);
    let audit = run_csv_audit(&config)?;
    audit.write(&out)?;
    println!(
        "sign audit checked {} gap rows",
        audit_signs(&audit.report.rows)?
    );

    let mean = |imputer: &str, metric: &str, group: &str| {
        audit
            .report
            .find("csv", imputer, metric, group)
            .and_then(|r| r.mean)
    };
    println!(
        "{:<24} {:>8} {:>10} {:>10} {:>10}",
        "imputer", "auc", "fnr@0.05", "fnr@0.30", "fnr@0.50"
    );
    for imputer in config.imputers.iter().map(|i| i.label()) {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:+.4}"));
        println!(
            "{:<24} {:>8} {:>10} {:>10} {:>10}",
            imputer,
            fmt(mean(&imputer, "auc", "overall")),
            fmt(mean(&imputer, "fnr@0.05", "gap")),
            fmt(mean(&imputer, "fnr@0.30", "gap")),
            fmt(mean(&imputer, "fnr@0.50", "gap")),
        );
    }
    println!("report written to {}", out.display());
    Ok(())
}
