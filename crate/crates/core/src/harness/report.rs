use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::metrics::{summarise, BootstrapSummary, GROUP_FIELDS};

/// One metric value of the long-format report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub imputer: String,
    pub metric: String,
    pub group: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Replicates (repetitions or resamples) the value was defined in.
    pub n: usize,
    pub n_undefined: usize,
    pub status: String,
}

pub const STATUS_OK: &str = "ok";

impl ReportRow {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    pub fn is_error(&self) -> bool {
        self.status.starts_with("error")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    /// SHA-256 of `config_toml`.
    pub config_sha256: String,
    pub config_toml: String,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Result<Self> {
        let config_toml = config.to_toml()?;
        let digest = Sha256::digest(config_toml.as_bytes());
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            master_seed: config.master_seed,
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            config_toml,
        })
    }

    /// The configuration this report was produced from.
    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(&self.config_toml)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub rows: Vec<ReportRow>,
    pub manifest: Manifest,
}

impl AuditReport {
    pub fn errors(&self) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.is_error()).collect()
    }

    pub fn find(
        &self,
        scenario: &str,
        imputer: &str,
        metric: &str,
        group: &str,
    ) -> Option<&ReportRow> {
        self.rows.iter().find(|r| {
            r.scenario == scenario && r.imputer == imputer && r.metric == metric && r.group == group
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }

    /// Writes `report.csv` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let report = dir.join("report.csv");
        let manifest = dir.join("manifest.json");
        fs::write(&report, self.to_csv()?)?;
        fs::write(&manifest, serde_json::to_string_pretty(&self.manifest)?)?;
        Ok((report, manifest))
    }
}

pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Schema(e.to_string()))
}

pub fn read_rows(text: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Summary of one group-metric field over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSummary {
    pub summary: Option<BootstrapSummary>,
    pub undefined: usize,
    pub status: String,
}

/// Summarises replicate records of a group metric, `[overall, rest,
/// marginalised, gap]` each. Per-group fields and the gap share the replicates
/// where both groups are defined, so the gap of the means equals the
/// difference of the per-group means. With `strict`, more than half of the
/// replicates undefined marks the field unreliable.
pub fn summarise_group_records(records: &[[Option<f64>; 4]], strict: bool) -> [FieldSummary; 4] {
    let total = records.len();
    let paired: Vec<&[Option<f64>; 4]> = records
        .iter()
        .filter(|r| r[1].is_some() && r[2].is_some())
        .collect();
    let field = |k: usize| -> FieldSummary {
        let values: Vec<f64> = if k == 0 || paired.is_empty() {
            records.iter().filter_map(|r| r[k]).collect()
        } else {
            paired.iter().filter_map(|r| r[k]).collect()
        };
        let undefined = total - values.len();
        if values.is_empty() {
            return FieldSummary {
                summary: None,
                undefined,
                status: "undefined".into(),
            };
        }
        if strict && 2 * undefined > total {
            return FieldSummary {
                summary: None,
                undefined,
                status: format!("unreliable: {undefined}/{total} replicates undefined"),
            };
        }
        FieldSummary {
            summary: summarise(&values, undefined).ok(),
            undefined,
            status: STATUS_OK.into(),
        }
    };
    [field(0), field(1), field(2), field(3)]
}

/// Report rows for one group metric.
pub fn group_rows(
    scenario: &str,
    imputer: &str,
    metric: &str,
    summaries: &[FieldSummary; 4],
) -> Vec<ReportRow> {
    GROUP_FIELDS
        .iter()
        .zip(summaries)
        .map(|(group, f)| ReportRow {
            scenario: scenario.into(),
            imputer: imputer.into(),
            metric: metric.into(),
            group: (*group).into(),
            mean: f.summary.map(|s| s.mean),
            std: f.summary.map(|s| s.std),
            lower: f.summary.map(|s| s.lower),
            upper: f.summary.map(|s| s.upper),
            n: f.summary.map_or(0, |s| s.n_resamples),
            n_undefined: f.undefined,
            status: f.status.clone(),
        })
        .collect()
}

/// Rows for a cell that could not be computed.
pub fn status_rows(scenario: &str, imputer: &str, metric: &str, status: &str) -> Vec<ReportRow> {
    GROUP_FIELDS
        .iter()
        .map(|group| ReportRow {
            scenario: scenario.into(),
            imputer: imputer.into(),
            metric: metric.into(),
            group: (*group).into(),
            mean: None,
            std: None,
            lower: None,
            upper: None,
            n: 0,
            n_undefined: 0,
            status: status.into(),
        })
        .collect()
}

/// Checks `gap = marginalised − rest` on the reported means of every cell.
pub fn audit_signs(rows: &[ReportRow]) -> Result<usize> {
    let mut checked = 0;
    for gap in rows.iter().filter(|r| r.group == "gap" && r.is_ok()) {
        let find = |g: &str| {
            rows.iter().find(|r| {
                r.scenario == gap.scenario
                    && r.imputer == gap.imputer
                    && r.metric == gap.metric
                    && r.group == g
                    && r.is_ok()
            })
        };
        let (Some(m), Some(r)) = (find("marginalised"), find("rest")) else {
            continue;
        };
        let (Some(gm), Some(mm), Some(rm)) = (gap.mean, m.mean, r.mean) else {
            continue;
        };
        let scale = mm.abs().max(rm.abs()).max(1.0);
        if (gm - (mm - rm)).abs() > 1e-12 * scale {
            return Err(Error::Schema(format!(
                "gap {gm} != marginalised {mm} - rest {rm} for {}/{}/{}",
                gap.scenario, gap.imputer, gap.metric
            )));
        }
        checked += 1;
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_summaries_keep_gap_consistent() {
        let records = vec![
            [Some(0.5), Some(0.2), Some(0.7), Some(0.5)],
            [Some(0.4), Some(0.1), None, None],
            [Some(0.6), Some(0.3), Some(0.2), Some(-0.1)],
        ];
        let s = summarise_group_records(&records, true);
        assert_eq!(s[0].summary.unwrap().n_resamples, 3);
        assert_eq!(s[1].summary.unwrap().n_resamples, 2);
        let rows = group_rows("S1", "GroupMean", "auc", &s);
        assert_eq!(audit_signs(&rows).unwrap(), 1);
        assert_eq!(rows[1].n_undefined, 1);
    }

    #[test]
    fn strict_mode_flags_mostly_undefined_fields() {
        let records = vec![[Some(1.0), Some(1.0), None, None]; 3]
            .into_iter()
            .chain([[Some(1.0), Some(1.0), Some(2.0), Some(1.0)]])
            .collect::<Vec<_>>();
        let s = summarise_group_records(&records, true);
        assert!(s[2].status.starts_with("unreliable"));
        assert_eq!(s[0].status, STATUS_OK);
        let lax = summarise_group_records(&records, false);
        assert_eq!(lax[2].status, STATUS_OK);
    }

    #[test]
    fn csv_round_trip_and_audit_failure() {
        let mut rows = status_rows("S2", "MICE", "fnr@0.30", "error: boom");
        rows.extend(group_rows(
            "S2",
            "MICE",
            "auc",
            &summarise_group_records(&[[Some(0.8), Some(0.9), Some(0.7), Some(-0.2)]], false),
        ));
        let text = rows_to_csv(&rows).unwrap();
        assert!(text.starts_with(
            "scenario,imputer,metric,group,mean,std,lower,upper,n,n_undefined,status"
        ));
        let back = read_rows(&text).unwrap();
        assert_eq!(back, rows);
        let mut bad = back.clone();
        let gap = bad
            .iter_mut()
            .find(|r| r.metric == "auc" && r.group == "gap")
            .unwrap();
        gap.mean = Some(0.3);
        assert!(audit_signs(&bad).is_err());
    }
}
