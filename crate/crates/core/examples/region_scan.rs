//! Scans the gap difference `Δ^pop − Δ^group` over both groups' correlations
//! and prints a coarse character map (`+`/`-` sign, `#` where group-mean
//! imputation widens an already positive gap).
//!
//! `cargo run --release --example region_scan [out_dir]`

use std::path::PathBuf;

use fairimpute::harness::{run_region_scan, ExperimentConfig};

fn main() -> fairimpute::Result<()> {
    let mut config = ExperimentConfig::reference_simulation();
    config.output_dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "out/region".into()),
    );
    let (cells, path) = run_region_scan(&config, &config.output_dir)?;

    let side = (cells.len() as f64).sqrt().round() as usize;
    let positive = cells
        .iter()
        .filter(|c| c.diff.is_some_and(|d| d > 0.0))
        .count();
    let negative = cells
        .iter()
        .filter(|c| c.diff.is_some_and(|d| d < 0.0))
        .count();
    let t3 = cells.iter().filter(|c| c.t3 == Some(true)).count();
    println!(
        "{} cells: diff > 0 in {positive}, diff < 0 in {negative}, t3 in {t3}",
        cells.len()
    );

    // Rows: rho_ng from high to low; columns: rho_g from low to high.
    for j in (0..side).rev().step_by(5) {
        let line: String = (0..side)
            .step_by(2)
            .map(|i| {
                let c = &cells[i * side + j];
                match (c.t3, c.diff) {
                    (Some(true), _) => '#',
                    (_, Some(d)) if d > 0.0 => '+',
                    (_, Some(_)) => '-',
                    _ => ' ',
                }
            })
            .collect();
        println!("{:+.2} {line}", cells[j].rho_ng);
    }
    println!("written to {}", path.display());
    Ok(())
}
