//! Synthetic cohort with the schema of a clinical extract: many covariates,
//! a binary audited group and a binary outcome, with missingness in a key
//! covariate concentrated in the marginalised group and correlated with the
//! covariate's value.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Cohort, MaskedCohort, ObservationMask};
use crate::error::Result;
use crate::harness::config::{
    BinaryColumn, CsvConfig, ExperimentConfig, MetricKind, MetricsConfig,
};
use crate::impute::{ImputerSpec, Strategy};
use crate::missingness::{apply_calibrated, CalibratedMechanismSpec};
use crate::numeric::{rng, DenseMatrix};
use crate::predict::LogisticSpec;

pub const GROUP_COLUMN: &str = "group";
pub const OUTCOME_COLUMN: &str = "outcome";
pub const ID_COLUMN: &str = "id";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandinSpec {
    pub rows: usize,
    /// Number of covariates; column 0 is the key covariate.
    pub covariates: usize,
    pub marginalised_share: f64,
    /// Mean of the key covariate in the marginalised group (0 elsewhere).
    pub group_shift: f64,
    pub intercept: f64,
    pub key_effect: f64,
    /// Effect of each of the next covariates on the outcome logit.
    pub minor_effects: Vec<f64>,
    /// Correlation of the first `correlated` further covariates with the key.
    pub key_correlation: f64,
    pub correlated: usize,
    /// Key covariate observation rate and `Corr(O, X)`, `[rest, marginalised]`.
    /// Rates of 1 in both groups leave the key covariate complete.
    pub observation_rate: [f64; 2],
    pub observation_correlation: [f64; 2],
    /// Completely-at-random missingness rate of the further covariates that
    /// receive it.
    pub background_missing: f64,
    pub background_columns: usize,
    pub seed: u64,
}

impl Default for StandinSpec {
    fn default() -> Self {
        Self {
            rows: 6000,
            covariates: 67,
            marginalised_share: 0.15,
            group_shift: 1.0,
            intercept: -1.0,
            key_effect: 1.5,
            minor_effects: vec![0.4, -0.3, 0.3, 0.2],
            key_correlation: 0.3,
            correlated: 8,
            observation_rate: [0.95, 0.35],
            observation_correlation: [0.0, 0.6],
            background_missing: 0.05,
            background_columns: 8,
            seed: 0,
        }
    }
}

fn column_name(j: usize) -> String {
    format!("x{j:02}")
}

/// Generates the cohort and its observation mask.
pub fn generate_standin(spec: &StandinSpec) -> Result<MaskedCohort> {
    let (n, d) = (spec.rows, spec.covariates);
    let mut g = rng::stream(spec.seed, &[0x57A4D]);
    let mut values = Vec::with_capacity(n * d);
    let mut group = Vec::with_capacity(n);
    let mut outcome = Vec::with_capacity(n);
    let tail = (1.0 - spec.key_correlation.powi(2)).sqrt();
    for _ in 0..n {
        let marg = rng::uniform(&mut g) < spec.marginalised_share;
        let z = rng::standard_normal(&mut g);
        let row_start = values.len();
        values.push(z + if marg { spec.group_shift } else { 0.0 });
        for j in 1..d {
            let e = rng::standard_normal(&mut g);
            values.push(if j <= spec.correlated {
                spec.key_correlation * z + tail * e
            } else {
                e
            });
        }
        let row = &values[row_start..];
        let logit = spec.intercept
            + spec.key_effect * row[0]
            + spec
                .minor_effects
                .iter()
                .enumerate()
                .map(|(k, b)| b * row[1 + k])
                .sum::<f64>();
        let p = 1.0 / (1.0 + (-logit).exp());
        group.push(marg);
        outcome.push(g.random::<f64>() < p);
    }
    let cohort = Cohort::new(DenseMatrix::from_vec(n, d, values)?, group, outcome)?
        .with_covariate_names((0..d).map(column_name).collect())?;
    let key_mask = if spec.observation_rate.iter().all(|&a| a >= 1.0) {
        ObservationMask::fully_observed(n, d)
    } else {
        apply_calibrated(
            &cohort,
            &CalibratedMechanismSpec {
                observation_rate: spec.observation_rate,
                correlation: spec.observation_correlation,
                target_covariate: 0,
                seed: rng::derive_seed(spec.seed, &[1]),
            },
        )?
    };
    let mut background = rng::stream(spec.seed, &[2]);
    let mut observed = Vec::with_capacity(n * d);
    for i in 0..n {
        for j in 0..d {
            observed.push(match j {
                0 => key_mask.is_observed(i, 0),
                j if j <= spec.background_columns => {
                    rng::uniform(&mut background) >= spec.background_missing
                }
                _ => true,
            });
        }
    }
    MaskedCohort::new(cohort, ObservationMask::from_vec(n, d, observed)?)
}

/// Writes the cohort as CSV: `id`, the covariates (empty when missing),
/// `group` (1 = marginalised) and `outcome`.
pub fn write_standin_csv(data: &MaskedCohort, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![ID_COLUMN.to_string()];
    header.extend(data.covariate_names().iter().cloned());
    header.extend([GROUP_COLUMN.to_string(), OUTCOME_COLUMN.to_string()]);
    w.write_record(&header)?;
    for i in 0..data.n_rows() {
        let mut record = vec![i.to_string()];
        record.extend(
            (0..data.n_cols()).map(|j| data.value(i, j).map_or(String::new(), |v| format!("{v}"))),
        );
        record.push((data.group()[i] as u8).to_string());
        record.push((data.outcome()[i] as u8).to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV section matching [`write_standin_csv`].
pub fn standin_csv_config(path: PathBuf) -> CsvConfig {
    let binary = |column: &str| BinaryColumn {
        column: column.into(),
        positive: vec!["1".into()],
        negative: Some(vec!["0".into()]),
    };
    CsvConfig {
        path,
        group: binary(GROUP_COLUMN),
        outcome: binary(OUTCOME_COLUMN),
        auxiliary: vec![],
        covariates: None,
        exclude: vec![ID_COLUMN.into()],
    }
}

/// Audit configuration over the five reference imputers, the default
/// penalty grid and the three capacities.
pub fn standin_audit_config(path: PathBuf, master_seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        generator: None,
        csv: Some(standin_csv_config(path)),
        scenarios: vec![],
        imputers: vec![
            ImputerSpec::new(Strategy::PopulationMean),
            ImputerSpec::new(Strategy::GroupMean),
            ImputerSpec::new(Strategy::Mice),
            ImputerSpec::new(Strategy::GroupMice),
            ImputerSpec::new(Strategy::GroupMice).with_indicators(true),
        ],
        model: LogisticSpec::default(),
        metrics: MetricsConfig {
            metrics: vec![
                MetricKind::ReconstructionError,
                MetricKind::Auc,
                MetricKind::Fnr,
                MetricKind::Prioritisation,
            ],
            capacities: vec![0.05, 0.30, 0.50],
        },
        split: None,
        master_seed,
        ..ExperimentConfig::reference_simulation()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::csv_audit::load_csv;

    #[test]
    fn written_csv_loads_back_identically() {
        let spec = StandinSpec {
            rows: 300,
            covariates: 6,
            ..StandinSpec::default()
        };
        let data = generate_standin(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("standin.csv");
        write_standin_csv(&data, &path).unwrap();
        let back = load_csv(&standin_csv_config(path)).unwrap();
        assert_eq!(back.group(), data.group());
        assert_eq!(back.outcome(), data.outcome());
        assert_eq!(back.covariate_names(), data.covariate_names());
        for i in 0..data.n_rows() {
            for j in 0..data.n_cols() {
                assert_eq!(back.value(i, j), data.value(i, j));
            }
        }
    }

    #[test]
    fn key_missingness_concentrates_in_the_marginalised_group() {
        let data = generate_standin(&StandinSpec::default()).unwrap();
        let rate = |flag: bool| {
            let rows: Vec<usize> = (0..data.n_rows())
                .filter(|&i| data.group()[i] == flag)
                .collect();
            rows.iter().filter(|&&i| data.value(i, 0).is_none()).count() as f64 / rows.len() as f64
        };
        assert!(rate(true) > 0.5 && rate(false) < 0.1);
    }
}
