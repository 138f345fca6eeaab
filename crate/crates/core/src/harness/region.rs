use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::harness::config::{ExperimentConfig, RegionConfig};
use crate::harness::report::rows_to_csv;
use crate::theory::{reference_region_inputs, region_scan, Axis, RegionCell, TheoremInputs};

/// Grid used when a configuration has no `[region]` section: 101 steps over
/// `[−0.3, 0.3]` on both axes.
pub fn default_axis() -> Axis {
    Axis::new(-0.3, 0.3, 101)
}

/// Base inputs and axes of a region scan.
pub fn region_inputs(config: Option<&RegionConfig>) -> Result<(TheoremInputs, Axis, Axis)> {
    match config {
        Some(r) => Ok((
            TheoremInputs::new(r.ratio, r.marginalised, r.rest)?,
            r.rho_g,
            r.rho_ng,
        )),
        None => Ok((reference_region_inputs(), default_axis(), default_axis())),
    }
}

/// Evaluates the grid and writes `region_scan.csv` into `dir`. Infeasible
/// cells are kept with empty values and `feasible = false`.
pub fn run_region_scan(
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<(Vec<RegionCell>, PathBuf)> {
    let (base, rho_g, rho_ng) = region_inputs(config.region.as_ref())?;
    let cells = region_scan(&base, rho_g, rho_ng);
    std::fs::create_dir_all(dir)?;
    let path = dir.join("region_scan.csv");
    std::fs::write(&path, rows_to_csv(&cells)?)?;
    Ok((cells, path))
}
