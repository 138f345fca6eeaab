use std::collections::BTreeSet;
use std::path::Path;

use crate::data::{split_masked, Cohort, GroupAttribute, MaskedCohort, ObservationMask, SplitSpec};
use crate::error::{Error, Result};
use crate::harness::config::{BinaryColumn, CsvConfig, ExperimentConfig, MetricKind};
use crate::harness::report::{
    group_rows, status_rows, summarise_group_records, AuditReport, Manifest,
};
use crate::harness::simulate::metric_slots;
use crate::impute::{fit_transform, ImputerSpec};
use crate::metrics::{auc_score, bootstrap_replicates, gather, threshold_metrics, GroupMetric};
use crate::numeric::rng::derive_seed;
use crate::numeric::DenseMatrix;
use crate::predict::{train, FittedModel};

/// Scenario label of CSV audit rows.
pub const CSV_SCENARIO: &str = "csv";

fn map_binary(spec: &BinaryColumn, values: &[String]) -> Result<Vec<bool>> {
    let distinct: BTreeSet<&str> = values.iter().map(String::as_str).collect();
    match &spec.negative {
        Some(neg) => {
            if let Some(v) = distinct
                .iter()
                .find(|v| !spec.positive.iter().any(|p| p == *v) && !neg.iter().any(|n| n == *v))
            {
                return Err(Error::Schema(format!(
                    "column `{}` has unmapped value `{v}`",
                    spec.column
                )));
            }
        }
        None => {
            if distinct.len() > 2 {
                return Err(Error::Schema(format!(
                    "column `{}` is not binary: {} distinct values",
                    spec.column,
                    distinct.len()
                )));
            }
        }
    }
    Ok(values
        .iter()
        .map(|v| spec.positive.iter().any(|p| p == v))
        .collect())
}

/// Reads a cohort from CSV: header required, empty covariate cells are
/// missing, group/outcome/auxiliary columns mapped to booleans.
pub fn load_csv(config: &CsvConfig) -> Result<MaskedCohort> {
    load_csv_from(&config.path, config)
}

fn load_csv_from(path: &Path, config: &CsvConfig) -> Result<MaskedCohort> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found")))
    };
    let group_col = index(&config.group.column)?;
    let outcome_col = index(&config.outcome.column)?;
    let aux_cols: Vec<usize> = config
        .auxiliary
        .iter()
        .map(|a| index(&a.column))
        .collect::<Result<_>>()?;
    let reserved: BTreeSet<usize> = [group_col, outcome_col]
        .into_iter()
        .chain(aux_cols.iter().copied())
        .collect();
    let covariates: Vec<usize> = match &config.covariates {
        Some(names) => names.iter().map(|n| index(n)).collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|j| !reserved.contains(j) && !config.exclude.contains(&headers[*j]))
            .collect(),
    };
    if covariates.is_empty() {
        return Err(Error::Schema("no covariate columns".into()));
    }

    let d = covariates.len();
    let mut values = Vec::new();
    let mut observed = Vec::new();
    let mut group_raw = Vec::new();
    let mut outcome_raw = Vec::new();
    let mut aux_raw = vec![Vec::new(); aux_cols.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |j: usize| record.get(j).unwrap_or("").trim().to_string();
        for &j in &covariates {
            let text = cell(j);
            if text.is_empty() {
                values.push(0.0);
                observed.push(false);
            } else {
                let v: f64 = text.parse().map_err(|_| {
                    Error::Schema(format!(
                        "row {}: `{}` value `{text}` is not a number",
                        line + 2,
                        headers[j]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite("CSV covariate"));
                }
                values.push(v);
                observed.push(true);
            }
        }
        let required = |j: usize| {
            let v = cell(j);
            if v.is_empty() {
                Err(Error::Schema(format!(
                    "row {}: `{}` is empty",
                    line + 2,
                    headers[j]
                )))
            } else {
                Ok(v)
            }
        };
        group_raw.push(required(group_col)?);
        outcome_raw.push(required(outcome_col)?);
        for (k, &j) in aux_cols.iter().enumerate() {
            aux_raw[k].push(required(j)?);
        }
    }
    let n = group_raw.len();
    if n == 0 {
        return Err(Error::Schema("CSV has no data rows".into()));
    }
    let auxiliary = config
        .auxiliary
        .iter()
        .zip(&aux_raw)
        .map(|(spec, raw)| {
            Ok(GroupAttribute {
                name: spec.column.clone(),
                members: map_binary(spec, raw)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cohort = Cohort::new(
        DenseMatrix::from_vec(n, d, values)?,
        map_binary(&config.group, &group_raw)?,
        map_binary(&config.outcome, &outcome_raw)?,
    )?
    .with_covariate_names(covariates.iter().map(|&j| headers[j].clone()).collect())?
    .with_auxiliary_groups(auxiliary)?;
    MaskedCohort::from_incomplete(cohort, ObservationMask::from_vec(n, d, observed)?)
}

/// Observed mean and standard deviation per covariate (scale 1 for
/// constant columns).
fn standardisation(train: &MaskedCohort) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut shift = Vec::new();
    let mut scale = Vec::new();
    for j in 0..train.n_cols() {
        let v = train.observed_column(j);
        if v.is_empty() {
            return Err(Error::Precondition(format!(
                "covariate `{}` has no observed training values",
                train.covariate_names()[j]
            )));
        }
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        shift.push(m);
        scale.push(if sd > 0.0 { sd } else { 1.0 });
    }
    Ok((shift, scale))
}

/// Result of a CSV audit: the report plus each imputer's fitted model and
/// test-set scores.
#[derive(Debug, Clone)]
pub struct CsvAuditOutput {
    pub report: AuditReport,
    pub models: Vec<(String, std::result::Result<FittedModel, String>)>,
    pub test_scores: Vec<(String, Vec<f64>)>,
    pub test_rows: Vec<usize>,
}

impl CsvAuditOutput {
    /// Writes the report, manifest and one model JSON per imputer.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.report.write(dir)?;
        let models = dir.join("models");
        std::fs::create_dir_all(&models)?;
        for (label, model) in &self.models {
            if let Ok(m) = model {
                let file: String = label
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                    .collect();
                std::fs::write(models.join(format!("{file}.json")), m.to_json()?)?;
            }
        }
        Ok(())
    }
}

/// Ingest → split → standardise on train → per imputer: fit/transform,
/// train with penalty selection on the tuning split, bootstrap test metrics.
/// Reconstruction metrics are reported as undefined (no ground truth).
pub fn run_csv_audit(config: &ExperimentConfig) -> Result<CsvAuditOutput> {
    config.validate_csv()?;
    let csv = config.csv.as_ref().expect("validated");
    let data = load_csv(csv)?;
    let f = config.split_fractions();
    let parts = split_masked(
        &data,
        &SplitSpec::new(f[0], f[1], f[2], derive_seed(config.master_seed, &[1]))?,
    )?;
    let (shift, scale) = standardisation(&parts.train)?;
    let train_data = parts.train.standardised(&shift, &scale);
    let tune_data = parts.tune.as_ref().map(|t| t.standardised(&shift, &scale));
    let test_data = parts
        .test
        .as_ref()
        .expect("validated test fraction")
        .standardised(&shift, &scale);

    let slots = metric_slots(config);
    let y = test_data.outcome().to_vec();
    let g = test_data.group().to_vec();
    let mut rows = Vec::new();
    let mut models = Vec::new();
    let mut test_scores = Vec::new();
    let boot_seed = derive_seed(config.master_seed, &[5]);

    for (k, imputer) in config.imputers.iter().enumerate() {
        let label = imputer.label();
        let imputer = ImputerSpec {
            seed: derive_seed(config.master_seed, &[4, k as u64]),
            ..imputer.clone()
        };
        let outcome = (|| -> Result<(FittedModel, Vec<f64>)> {
            let (fitted, train_completed) = fit_transform(&train_data, &imputer)?;
            let tune = tune_data
                .as_ref()
                .map(|t| fitted.transform(t))
                .transpose()?;
            let test = fitted.transform(&test_data)?;
            let model = train(
                &train_completed,
                train_data.outcome(),
                &config.model,
                tune.as_ref()
                    .zip(tune_data.as_ref())
                    .map(|(r, t)| (r, t.outcome())),
            )?;
            let mut names = data.covariate_names().to_vec();
            if imputer.append_indicators {
                names.extend(
                    data.covariate_names()
                        .iter()
                        .map(|n| format!("{n}_missing")),
                );
            }
            let model = model.with_feature_names(names)?;
            let scores = model.predict(&test)?;
            Ok((model, scores))
        })();
        let scores = match outcome {
            Ok((model, scores)) => {
                models.push((label.clone(), Ok(model)));
                scores
            }
            Err(e) => {
                for slot in &slots {
                    rows.extend(status_rows(
                        CSV_SCENARIO,
                        &label,
                        &slot.label(),
                        &format!("error: {e}"),
                    ));
                }
                models.push((label.clone(), Err(e.to_string())));
                continue;
            }
        };

        // All metric fields per resample, 4 per slot, on paired resamples.
        let metric = |idx: &[usize]| -> Vec<Option<f64>> {
            let (s, yy, gg) = (gather(&scores, idx), gather(&y, idx), gather(&g, idx));
            let mut out = Vec::with_capacity(4 * slots.len());
            for slot in &slots {
                let m = match slot.kind {
                    MetricKind::ReconstructionError => GroupMetric::new(None, None, None),
                    MetricKind::Auc => {
                        let per = |flag: bool| {
                            let keep: Vec<usize> =
                                (0..s.len()).filter(|&i| gg[i] == flag).collect();
                            auc_score(&gather(&s, &keep), &gather(&yy, &keep))
                        };
                        GroupMetric::new(auc_score(&s, &yy), per(false), per(true))
                    }
                    MetricKind::Fnr | MetricKind::Prioritisation => {
                        match threshold_metrics(&s, &yy, &gg, slot.capacity.unwrap_or(1.0)) {
                            Ok(t) if slot.kind == MetricKind::Fnr => t.fnr,
                            Ok(t) => t.prioritisation,
                            Err(_) => GroupMetric::new(None, None, None),
                        }
                    }
                };
                out.extend(m.fields());
            }
            out
        };
        let (full, replicates) =
            bootstrap_replicates(scores.len(), config.bootstrap_resamples, boot_seed, metric);
        for (si, slot) in slots.iter().enumerate() {
            let name = slot.label();
            if slot.kind == MetricKind::ReconstructionError {
                rows.extend(status_rows(
                    CSV_SCENARIO,
                    &label,
                    &name,
                    "undefined: ground truth unknown",
                ));
                continue;
            }
            let records: Vec<[Option<f64>; 4]> = replicates
                .iter()
                .map(|r| [r[4 * si], r[4 * si + 1], r[4 * si + 2], r[4 * si + 3]])
                .collect();
            let mut summary = summarise_group_records(&records, true);
            for (k, fs) in summary.iter_mut().enumerate() {
                if full[4 * si + k].is_none() {
                    fs.summary = None;
                    fs.status = "undefined on the full test set".into();
                }
            }
            rows.extend(group_rows(CSV_SCENARIO, &label, &name, &summary));
        }
        test_scores.push((label, scores));
    }
    Ok(CsvAuditOutput {
        report: AuditReport {
            rows,
            manifest: Manifest::new("audit-csv", config)?,
        },
        models,
        test_scores,
        test_rows: parts.indices[2].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn csv_config(path: &Path) -> CsvConfig {
        CsvConfig {
            path: path.to_path_buf(),
            group: BinaryColumn {
                column: "grp".into(),
                positive: vec!["F".into()],
                negative: None,
            },
            outcome: BinaryColumn {
                column: "y".into(),
                positive: vec!["1".into()],
                negative: Some(vec!["0".into()]),
            },
            auxiliary: vec![],
            covariates: None,
            exclude: vec!["id".into()],
        }
    }

    #[test]
    fn loads_missing_cells_and_mappings() {
        let f = write_csv("id,a,grp,b,y\n1,1.5,F,,1\n2,,M,2,0\n3,0.5,M,-1,1\n");
        let data = load_csv(&csv_config(f.path())).unwrap();
        assert_eq!(data.covariate_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(data.group(), &[true, false, false]);
        assert_eq!(data.outcome(), &[true, false, true]);
        assert_eq!(data.value(0, 1), None);
        assert_eq!(data.value(1, 0), None);
        assert_eq!(data.value(2, 1), Some(-1.0));
        assert!(!data.truth_known());
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = write_csv("a,grp,y\n1,F,1\n2,M,0\n3,X,1\n");
        assert!(matches!(
            load_csv(&csv_config(f.path())),
            Err(Error::Schema(_))
        ));
        let f = write_csv("a,grp,y\n1,F,2\n");
        assert!(load_csv(&csv_config(f.path())).is_err());
        let f = write_csv("a,y\n1,1\n");
        let err = load_csv(&csv_config(f.path())).unwrap_err();
        assert!(err.to_string().contains("grp"));
        let f = write_csv("a,grp,y\nabc,F,1\n");
        assert!(load_csv(&csv_config(f.path())).is_err());
    }
}
