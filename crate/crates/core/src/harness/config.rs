use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impute::ImputerSpec;
use crate::missingness::ScenarioSpec;
use crate::predict::LogisticSpec;
use crate::synthgen::PopulationSpec;
use crate::theory::{Axis, GroupSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Base,
    DifferentPrevalence,
    Correlated,
}

/// Synthetic population: a preset, optionally resized, or a full spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub n_majority: Option<usize>,
    #[serde(default)]
    pub n_marginalised: Option<usize>,
    #[serde(default)]
    pub population: Option<PopulationSpec>,
}

impl GeneratorConfig {
    pub fn preset(preset: Preset) -> Self {
        Self {
            preset: Some(preset),
            n_majority: None,
            n_marginalised: None,
            population: None,
        }
    }

    /// Population for one repetition; `seed` replaces any configured seed.
    pub fn population(&self, seed: u64) -> Result<PopulationSpec> {
        let mut spec = match (&self.population, self.preset) {
            (Some(p), None) => p.clone(),
            (None, Some(Preset::Base)) => PopulationSpec::reference_base(seed),
            (None, Some(Preset::DifferentPrevalence)) => {
                PopulationSpec::reference_different_prevalence(seed)
            }
            (None, Some(Preset::Correlated)) => PopulationSpec::reference_correlated(seed),
            _ => {
                return Err(Error::Config(
                    "generator needs exactly one of `preset` and `population`".into(),
                ))
            }
        };
        spec.seed = seed;
        if let Some(n) = self.n_majority {
            spec.n_majority = n;
        }
        if let Some(n) = self.n_marginalised {
            spec.n_marginalised = n;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Value mapping of a binary attribute column: cells listed in `positive`
/// map to true; when `negative` is given every other value is an error,
/// otherwise the column may hold at most two distinct values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryColumn {
    pub column: String,
    pub positive: Vec<String>,
    #[serde(default)]
    pub negative: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvConfig {
    pub path: PathBuf,
    /// Audited group; `positive` values mark the marginalised group.
    pub group: BinaryColumn,
    pub outcome: BinaryColumn,
    /// Extra group attributes, used by intersectional imputers.
    #[serde(default)]
    pub auxiliary: Vec<BinaryColumn>,
    /// Covariate columns; every remaining column when absent.
    #[serde(default)]
    pub covariates: Option<Vec<String>>,
    /// Columns ignored when covariates are inferred.
    #[serde(default)]
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    ReconstructionError,
    Auc,
    Fnr,
    Prioritisation,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::ReconstructionError => "reconstruction_error",
            MetricKind::Auc => "auc",
            MetricKind::Fnr => "fnr",
            MetricKind::Prioritisation => "prioritisation",
        }
    }

    pub fn uses_capacity(self) -> bool {
        matches!(self, MetricKind::Fnr | MetricKind::Prioritisation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricKind>,
    #[serde(default = "default_capacities")]
    pub capacities: Vec<f64>,
}

fn default_metrics() -> Vec<MetricKind> {
    vec![
        MetricKind::ReconstructionError,
        MetricKind::Auc,
        MetricKind::Fnr,
        MetricKind::Prioritisation,
    ]
}

fn default_capacities() -> Vec<f64> {
    vec![0.05, 0.30, 0.50]
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            metrics: default_metrics(),
            capacities: default_capacities(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train: f64,
    pub tune: f64,
    pub test: f64,
}

/// Region scan over `(ρ_g, ρ_¬g)` with fixed observed means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    pub ratio: f64,
    pub marginalised: GroupSpec,
    pub rest: GroupSpec,
    pub rho_g: Axis,
    pub rho_ng: Axis,
}

/// Monte Carlo checks of the closed forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    #[serde(default = "default_cases")]
    pub cases: usize,
    #[serde(default = "default_samples")]
    pub samples_per_group: usize,
    #[serde(default = "default_relative_tolerance")]
    pub relative_tolerance: f64,
    #[serde(default = "default_predicate_inputs")]
    pub predicate_inputs: usize,
}

fn default_cases() -> usize {
    20
}

fn default_samples() -> usize {
    1_000_000
}

fn default_relative_tolerance() -> f64 {
    0.02
}

fn default_predicate_inputs() -> usize {
    10_000
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            cases: default_cases(),
            samples_per_group: default_samples(),
            relative_tolerance: default_relative_tolerance(),
            predicate_inputs: default_predicate_inputs(),
        }
    }
}

/// One experiment, read from TOML. Seeds inside nested specs are ignored:
/// every random stream derives from `master_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub generator: Option<GeneratorConfig>,
    #[serde(default)]
    pub csv: Option<CsvConfig>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default)]
    pub imputers: Vec<ImputerSpec>,
    #[serde(default)]
    pub model: LogisticSpec,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub split: Option<SplitConfig>,
    #[serde(default = "default_hundred")]
    pub repetitions: usize,
    #[serde(default = "default_hundred")]
    pub bootstrap_resamples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub validation: Option<ValidationConfig>,
}

fn default_hundred() -> usize {
    100
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Environment variable overriding `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "FAIRIMPUTE_OUTPUT_DIR";

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(csv) = config.csv.as_mut() {
            if csv.path.is_relative() {
                if let Some(dir) = path.parent() {
                    csv.path = dir.join(&csv.path);
                }
            }
        }
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            config.output_dir = PathBuf::from(dir);
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reference simulation: base population, S1–S3, the five imputation
    /// strategies, `λ = 1`, 80/20 split.
    pub fn reference_simulation() -> Self {
        use crate::impute::Strategy;
        use crate::missingness::Scenario;
        Self {
            generator: Some(GeneratorConfig::preset(Preset::Base)),
            csv: None,
            scenarios: [Scenario::S1, Scenario::S2, Scenario::S3]
                .into_iter()
                .map(|s| ScenarioSpec::reference(s, 0))
                .collect(),
            imputers: vec![
                ImputerSpec::new(Strategy::PopulationMean),
                ImputerSpec::new(Strategy::GroupMean),
                ImputerSpec::new(Strategy::Mice),
                ImputerSpec::new(Strategy::GroupMice),
                ImputerSpec::new(Strategy::GroupMice).with_indicators(true),
            ],
            model: LogisticSpec::fixed(1.0),
            metrics: MetricsConfig::default(),
            split: None,
            repetitions: 100,
            bootstrap_resamples: 100,
            master_seed: 0,
            output_dir: default_output(),
            region: None,
            validation: None,
        }
    }

    /// Split fractions, defaulting to 80/0/20 for simulations and 80/10/10
    /// for CSV audits.
    pub fn split_fractions(&self) -> [f64; 3] {
        match (self.split, self.csv.is_some()) {
            (Some(s), _) => [s.train, s.tune, s.test],
            (None, false) => [0.8, 0.0, 0.2],
            (None, true) => [0.8, 0.1, 0.1],
        }
    }

    fn validate_common(&self) -> Result<()> {
        if self.imputers.is_empty() {
            return Err(Error::Config("at least one imputer is required".into()));
        }
        if self.metrics.metrics.is_empty() {
            return Err(Error::Config("at least one metric is required".into()));
        }
        for imp in &self.imputers {
            imp.validate()?;
        }
        self.model.validate()?;
        if self.metrics.metrics.iter().any(|m| m.uses_capacity())
            && self.metrics.capacities.is_empty()
        {
            return Err(Error::Config(
                "threshold metrics need at least one capacity".into(),
            ));
        }
        if let Some(c) = self
            .metrics
            .capacities
            .iter()
            .find(|&&c| !(c > 0.0 && c <= 1.0))
        {
            return Err(Error::Config(format!("capacity {c} outside (0, 1]")));
        }
        let f = self.split_fractions();
        crate::data::SplitSpec::new(f[0], f[1], f[2], 0)?;
        if f[2] == 0.0 {
            return Err(Error::Config("a test partition is required".into()));
        }
        Ok(())
    }

    pub fn validate_simulation(&self) -> Result<()> {
        self.validate_common()?;
        let gen = self
            .generator
            .as_ref()
            .ok_or_else(|| Error::Config("simulation needs a [generator] section".into()))?;
        gen.population(0)?;
        if self.scenarios.is_empty() {
            return Err(Error::Config("at least one scenario is required".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.model.fixed_penalty.is_none() && self.split_fractions()[1] == 0.0 {
            return Err(Error::Config(
                "simulation without a tuning split needs model.fixed_penalty".into(),
            ));
        }
        Ok(())
    }

    pub fn validate_csv(&self) -> Result<()> {
        self.validate_common()?;
        if self.csv.is_none() {
            return Err(Error::Config("CSV audit needs a [csv] section".into()));
        }
        if self.bootstrap_resamples == 0 {
            return Err(Error::Config("bootstrap resamples must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_round_trips_through_toml() {
        let c = ExperimentConfig::reference_simulation();
        c.validate_simulation().unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let c = ExperimentConfig::from_toml(
            r#"
            master_seed = 7
            [generator]
            preset = "base"
            n_majority = 1000
            [[scenarios]]
            scenario = "S1"
            target_covariate = 0
            [[imputers]]
            strategy = "group_mean"
            [model]
            fixed_penalty = 1.0
            "#,
        )
        .unwrap();
        c.validate_simulation().unwrap();
        assert_eq!(c.repetitions, 100);
        assert_eq!(c.metrics.capacities, vec![0.05, 0.30, 0.50]);
        assert_eq!(c.split_fractions(), [0.8, 0.0, 0.2]);
        assert_eq!(c.generator.unwrap().population(3).unwrap().n_majority, 1000);
    }

    #[test]
    fn zero_imputers_fail_validation() {
        let c = ExperimentConfig {
            imputers: vec![],
            ..ExperimentConfig::reference_simulation()
        };
        assert!(matches!(c.validate_simulation(), Err(Error::Config(_))));
        let c = ExperimentConfig {
            repetitions: 0,
            ..ExperimentConfig::reference_simulation()
        };
        assert!(c.validate_simulation().is_err());
    }
}
