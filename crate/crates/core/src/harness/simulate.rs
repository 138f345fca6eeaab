use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split_masked, MaskedCohort, SplitSpec};
use crate::error::Result;
use crate::harness::config::{ExperimentConfig, MetricKind};
use crate::harness::report::{
    group_rows, rows_to_csv, status_rows, summarise_group_records, AuditReport, Manifest,
};
use crate::impute::{fit_transform, ImputerSpec};
use crate::metrics::{auc, reconstruction_error, threshold_metrics, GroupMetric, GROUP_FIELDS};
use crate::missingness::{apply_scenario, ScenarioSpec};
use crate::numeric::rng::derive_seed;
use crate::predict::train;
use crate::synthgen::generate;

/// A reported metric: its kind and, for threshold metrics, the capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSlot {
    pub kind: MetricKind,
    pub capacity: Option<f64>,
}

impl MetricSlot {
    pub fn label(&self) -> String {
        match self.capacity {
            Some(c) => format!("{}@{c:.2}", self.kind.name()),
            None => self.kind.name().to_string(),
        }
    }
}

/// Expands configured metric kinds over the capacity list.
pub fn metric_slots(config: &ExperimentConfig) -> Vec<MetricSlot> {
    let mut out = Vec::new();
    for &kind in &config.metrics.metrics {
        if kind.uses_capacity() {
            out.extend(config.metrics.capacities.iter().map(|&c| MetricSlot {
                kind,
                capacity: Some(c),
            }));
        } else {
            out.push(MetricSlot {
                kind,
                capacity: None,
            });
        }
    }
    out
}

/// Metric values of one (repetition, scenario, imputer, metric) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub repetition: usize,
    pub scenario: String,
    pub imputer: String,
    pub metric: String,
    pub values: [Option<f64>; 4],
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct LongRecord<'a> {
    repetition: usize,
    scenario: &'a str,
    imputer: &'a str,
    metric: &'a str,
    group: &'a str,
    value: Option<f64>,
    error: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub report: AuditReport,
    pub records: Vec<CellRecord>,
}

impl SimulationOutput {
    /// Records of one cell, in repetition order.
    pub fn cell(&self, scenario: &str, imputer: &str, metric: &str) -> Vec<&CellRecord> {
        self.records
            .iter()
            .filter(|r| r.scenario == scenario && r.imputer == imputer && r.metric == metric)
            .collect()
    }

    /// Per-repetition values in long format.
    pub fn records_csv(&self) -> Result<String> {
        let mut long = Vec::with_capacity(self.records.len() * 4);
        for r in &self.records {
            for (group, value) in GROUP_FIELDS.iter().zip(r.values) {
                long.push(LongRecord {
                    repetition: r.repetition,
                    scenario: &r.scenario,
                    imputer: &r.imputer,
                    metric: &r.metric,
                    group,
                    value,
                    error: r.error.as_deref(),
                });
            }
        }
        rows_to_csv(&long)
    }

    /// Writes `report.csv`, `manifest.json` and `repetitions.csv`.
    pub fn write(&self, dir: &std::path::Path) -> Result<()> {
        self.report.write(dir)?;
        std::fs::write(dir.join("repetitions.csv"), self.records_csv()?)?;
        Ok(())
    }
}

fn error_records(
    rep: usize,
    scenario: &str,
    imputers: &[String],
    slots: &[MetricSlot],
    msg: &str,
) -> Vec<CellRecord> {
    let mut out = Vec::new();
    for imp in imputers {
        for slot in slots {
            out.push(CellRecord {
                repetition: rep,
                scenario: scenario.into(),
                imputer: imp.clone(),
                metric: slot.label(),
                values: [None; 4],
                error: Some(msg.into()),
            });
        }
    }
    out
}

/// Metric values of one imputer on one masked cohort. Reconstruction is
/// measured on every row; prediction metrics on the test partition.
fn evaluate_imputer(
    config: &ExperimentConfig,
    data: &MaskedCohort,
    scenario: &ScenarioSpec,
    test_idx: &[usize],
    train_idx: &[usize],
    imputer: &ImputerSpec,
    slots: &[MetricSlot],
) -> Vec<std::result::Result<GroupMetric, String>> {
    let train_data = data.select_rows(train_idx);
    let fitted = fit_transform(&train_data, imputer);
    let (fitted, train_completed) = match fitted {
        Ok(v) => v,
        Err(e) => return slots.iter().map(|_| Err(e.to_string())).collect(),
    };
    let all = fitted.transform(data).map_err(|e| e.to_string());
    let needs_model = slots
        .iter()
        .any(|s| s.kind != MetricKind::ReconstructionError);
    let scores = if needs_model {
        all.clone().and_then(|all| {
            let model = train(&train_completed, train_data.outcome(), &config.model, None)
                .map_err(|e| e.to_string())?;
            model
                .predict(&all.select_rows(test_idx))
                .map_err(|e| e.to_string())
        })
    } else {
        Err(String::new())
    };
    let y: Vec<bool> = test_idx.iter().map(|&i| data.outcome()[i]).collect();
    let g: Vec<bool> = test_idx.iter().map(|&i| data.group()[i]).collect();
    slots
        .iter()
        .map(|slot| match slot.kind {
            MetricKind::ReconstructionError => {
                let all = all.as_ref().map_err(Clone::clone)?;
                let truth = data.truth().ok_or("ground truth unknown")?;
                reconstruction_error(
                    truth.covariates(),
                    data.mask(),
                    all,
                    data.group(),
                    Some(scenario.target_covariate),
                )
                .map_err(|e| e.to_string())
            }
            MetricKind::Auc => {
                auc(scores.as_ref().map_err(Clone::clone)?, &y, &g).map_err(|e| e.to_string())
            }
            MetricKind::Fnr | MetricKind::Prioritisation => {
                let s = scores.as_ref().map_err(Clone::clone)?;
                let t = threshold_metrics(s, &y, &g, slot.capacity.unwrap_or(1.0))
                    .map_err(|e| e.to_string())?;
                Ok(if slot.kind == MetricKind::Fnr {
                    t.fnr
                } else {
                    t.prioritisation
                })
            }
        })
        .collect()
}

/// One repetition: generate, mask per scenario, split, impute, predict and
/// measure. Records come back in (scenario, imputer, metric) order.
pub fn run_repetition(config: &ExperimentConfig, rep: usize) -> Vec<CellRecord> {
    let slots = metric_slots(config);
    let labels: Vec<String> = config.imputers.iter().map(ImputerSpec::label).collect();
    let seed = config.master_seed;
    let rep64 = rep as u64;
    let cohort = config
        .generator
        .as_ref()
        .ok_or_else(|| crate::Error::Config("missing generator".into()))
        .and_then(|g| g.population(derive_seed(seed, &[rep64, 1])))
        .and_then(|p| generate(&p));
    let mut out = Vec::new();
    for (s, scenario) in config.scenarios.iter().enumerate() {
        let name = scenario.scenario.name();
        let prepared = cohort
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|cohort| {
                let spec = ScenarioSpec {
                    seed: derive_seed(seed, &[rep64, 2, s as u64]),
                    ..scenario.clone()
                };
                let mask = apply_scenario(cohort, &spec).map_err(|e| e.to_string())?;
                let data = MaskedCohort::new(cohort.clone(), mask).map_err(|e| e.to_string())?;
                let f = config.split_fractions();
                let split = SplitSpec::new(f[0], f[1], f[2], derive_seed(seed, &[rep64, 3]))
                    .map_err(|e| e.to_string())?;
                let parts = split_masked(&data, &split).map_err(|e| e.to_string())?;
                let [train_idx, _, test_idx] = parts.indices;
                Ok((data, train_idx, test_idx))
            });
        let (data, train_idx, test_idx) = match prepared {
            Ok(v) => v,
            Err(e) => {
                out.extend(error_records(rep, name, &labels, &slots, &e));
                continue;
            }
        };
        for (k, imputer) in config.imputers.iter().enumerate() {
            let imputer = ImputerSpec {
                seed: derive_seed(seed, &[rep64, 4, s as u64, k as u64]),
                ..imputer.clone()
            };
            let values = evaluate_imputer(
                config, &data, scenario, &test_idx, &train_idx, &imputer, &slots,
            );
            for (slot, v) in slots.iter().zip(values) {
                let (values, error) = match v {
                    Ok(m) => (m.fields(), None),
                    Err(e) => ([None; 4], Some(e)),
                };
                out.push(CellRecord {
                    repetition: rep,
                    scenario: name.into(),
                    imputer: labels[k].clone(),
                    metric: slot.label(),
                    values,
                    error,
                });
            }
        }
    }
    out
}

/// Runs every repetition (in parallel on the current rayon pool) and
/// aggregates each cell across repetitions: mean, standard deviation and
/// 2.5/97.5 percentiles of the per-repetition values.
pub fn run_simulation(config: &ExperimentConfig) -> Result<SimulationOutput> {
    config.validate_simulation()?;
    let per_rep: Vec<Vec<CellRecord>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(config, rep))
        .collect();
    let records: Vec<CellRecord> = per_rep.into_iter().flatten().collect();

    let slots = metric_slots(config);
    let mut rows = Vec::new();
    for scenario in &config.scenarios {
        let name = scenario.scenario.name();
        for imputer in &config.imputers {
            let label = imputer.label();
            for slot in &slots {
                let metric = slot.label();
                let cell: Vec<&CellRecord> = records
                    .iter()
                    .filter(|r| r.scenario == name && r.imputer == label && r.metric == metric)
                    .collect();
                let errors: Vec<&str> = cell.iter().filter_map(|r| r.error.as_deref()).collect();
                if errors.len() == cell.len() {
                    let msg = format!(
                        "error: {}",
                        errors.first().copied().unwrap_or("no repetitions")
                    );
                    rows.extend(status_rows(name, &label, &metric, &msg));
                    continue;
                }
                let values: Vec<[Option<f64>; 4]> = cell.iter().map(|r| r.values).collect();
                let mut summary = summarise_group_records(&values, false);
                if let Some(first) = errors.first() {
                    for f in summary.iter_mut() {
                        f.status = format!(
                            "error: {first} ({} of {} repetitions)",
                            errors.len(),
                            cell.len()
                        );
                    }
                }
                rows.extend(group_rows(name, &label, &metric, &summary));
            }
        }
    }
    Ok(SimulationOutput {
        report: AuditReport {
            rows,
            manifest: Manifest::new("simulate", config)?,
        },
        records,
    })
}

/// Runs [`run_simulation`] on a dedicated pool of `threads` workers.
pub fn run_simulation_with_threads(
    config: &ExperimentConfig,
    threads: usize,
) -> Result<SimulationOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| crate::Error::Config(e.to_string()))?;
    pool.install(|| run_simulation(config))
}
