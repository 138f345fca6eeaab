//! Monte Carlo check of the closed-form losses plus predicate equivalence
//! and empirical sign checks.
//!
//! `cargo run --release --example theorem_validation [cases] [samples_per_group]`

use fairimpute::harness::config::ValidationConfig;
use fairimpute::harness::run_validation;

fn main() -> fairimpute::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().ok());
    let settings = ValidationConfig {
        cases: args.next().flatten().unwrap_or(5),
        samples_per_group: args.next().flatten().unwrap_or(200_000),
        ..ValidationConfig::default()
    };
    let output = run_validation(&settings, 11)?;
    for row in output.rows.iter().filter(|r| r.check == "monte_carlo") {
        println!(
            "case {:>2} {:<24} closed {:.5} empirical {:.5} rel {:.4}",
            row.case,
            row.quantity,
            row.closed_form.unwrap_or(f64::NAN),
            row.empirical.unwrap_or(f64::NAN),
            row.relative_error.unwrap_or(f64::NAN)
        );
    }
    println!("{}", serde_json::to_string_pretty(&output.summary)?);
    Ok(())
}
