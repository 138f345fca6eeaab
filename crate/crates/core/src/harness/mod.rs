//! Experiment drivers: configuration, simulation, CSV audit, region scans
//! and theorem validation, all writing long-format reports.

pub mod config;
pub mod csv_audit;
pub mod region;
pub mod report;
pub mod simulate;
pub mod standin;
pub mod validate;

pub use config::{ExperimentConfig, MetricKind, Preset};
pub use csv_audit::{load_csv, run_csv_audit, CsvAuditOutput};
pub use region::run_region_scan;
pub use report::{AuditReport, Manifest, ReportRow};
pub use simulate::{run_simulation, run_simulation_with_threads, SimulationOutput};
pub use validate::{run_validation, run_validation_for, ValidationOutput};
