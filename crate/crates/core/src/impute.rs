//! Imputation strategies fitted on a training partition and applied to any
//! partition: population mean, group mean, and chained-equation multiple
//! imputation with or without group membership as a regressor.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ImputationResult, MaskedCohort};
use crate::error::{Error, Result};
use crate::numeric::linalg::{dot, mirror_upper};
use crate::numeric::{rng, solve_symmetric, DenseMatrix};

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    PopulationMean,
    GroupMean,
    Mice,
    GroupMice,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::PopulationMean => "PopulationMean",
            Strategy::GroupMean => "GroupMean",
            Strategy::Mice => "MICE",
            Strategy::GroupMice => "GroupMICE",
        }
    }

    pub fn is_chained(self) -> bool {
        matches!(self, Strategy::Mice | Strategy::GroupMice)
    }

    fn uses_groups(self) -> bool {
        matches!(self, Strategy::GroupMean | Strategy::GroupMice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputerSpec {
    pub strategy: Strategy,
    #[serde(default)]
    pub append_indicators: bool,
    #[serde(default = "default_ten")]
    pub mice_iterations: usize,
    #[serde(default = "default_ten")]
    pub mice_draws: usize,
    #[serde(default = "default_true")]
    pub noise_draws: bool,
    /// Group strategies condition on the audited group and every auxiliary
    /// attribute jointly (falling back to coarser cells when empty).
    #[serde(default)]
    pub intersectional: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_ten() -> usize {
    10
}

fn default_true() -> bool {
    true
}

impl ImputerSpec {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            append_indicators: false,
            mice_iterations: 10,
            mice_draws: 10,
            noise_draws: true,
            intersectional: false,
            seed: 0,
        }
    }

    pub fn with_indicators(mut self, on: bool) -> Self {
        self.append_indicators = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategy.is_chained() && (self.mice_iterations == 0 || self.mice_draws == 0) {
            return Err(Error::Config(
                "chained imputation needs at least one iteration and one draw".into(),
            ));
        }
        Ok(())
    }

    /// Number of completed tables produced: 1 for mean strategies.
    pub fn draws(&self) -> usize {
        if self.strategy.is_chained() {
            self.mice_draws
        } else {
            1
        }
    }

    /// Display label, e.g. `GroupMICE+indicators`.
    pub fn label(&self) -> String {
        let mut s = self.strategy.name().to_string();
        if self.intersectional {
            s.push_str("(intersectional)");
        }
        if self.append_indicators {
            s.push_str("+indicators");
        }
        s
    }
}

/// Per-covariate chained regression of one chain, over the augmented design
/// `[1, x_1..x_d, group attributes]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnModel {
    pub predictors: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub residual_std: f64,
    /// Set when there were too few observed rows for a regression.
    pub fallback_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedImputer {
    version: u32,
    spec: ImputerSpec,
    n_cols: usize,
    n_attributes: usize,
    /// `μ^O` per covariate.
    population_means: Vec<f64>,
    medians: Vec<f64>,
    /// Observed means per attribute-prefix cell, finest cells first. Keys are
    /// 0/1 strings over the attribute prefix.
    group_means: Vec<BTreeMap<String, Vec<Option<f64>>>>,
    chains: Vec<Vec<ColumnModel>>,
    warnings: Vec<String>,
}

impl FittedImputer {
    pub fn spec(&self) -> &ImputerSpec {
        &self.spec
    }

    pub fn population_means(&self) -> &[f64] {
        &self.population_means
    }

    pub fn medians(&self) -> &[f64] {
        &self.medians
    }

    /// Observed mean of `col` among rows with audited group `marginalised`,
    /// if the cell was populated at fit time.
    pub fn group_mean(&self, marginalised: bool, col: usize) -> Option<f64> {
        let key = if marginalised { "1" } else { "0" };
        self.group_means
            .last()?
            .get(key)?
            .get(col)
            .copied()
            .flatten()
    }

    pub fn chains(&self) -> &[Vec<ColumnModel>] {
        &self.chains
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fitted: Self = serde_json::from_str(text)?;
        if fitted.version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "imputer format version {} is not supported",
                fitted.version
            )));
        }
        Ok(fitted)
    }

    /// Fills the missing entries of `data`. Observed entries are copied
    /// verbatim.
    pub fn transform(&self, data: &MaskedCohort) -> Result<ImputationResult> {
        if data.n_cols() != self.n_cols {
            return Err(Error::Schema(format!(
                "imputer was fitted on {} covariates, data has {}",
                self.n_cols,
                data.n_cols()
            )));
        }
        let attrs = attribute_rows(
            data,
            self.spec.intersectional && self.spec.strategy.uses_groups(),
        );
        if self.spec.strategy.uses_groups()
            && attrs.first().map_or(0, Vec::len) != self.n_attributes
        {
            return Err(Error::Schema(
                "group attributes differ from the fit partition".into(),
            ));
        }
        let completed = match self.spec.strategy {
            Strategy::PopulationMean => vec![data.fill_missing(&self.population_means)],
            Strategy::GroupMean => vec![self.fill_group_means(data, &attrs)],
            Strategy::Mice | Strategy::GroupMice => (0..self.chains.len())
                .into_par_iter()
                .map(|c| self.transform_chain(data, &attrs, c))
                .collect(),
        };
        Ok(self.finish(data, completed, Vec::new()))
    }

    fn finish(
        &self,
        data: &MaskedCohort,
        completed: Vec<DenseMatrix>,
        mut extra: Vec<String>,
    ) -> ImputationResult {
        let mut warnings = self.warnings.clone();
        warnings.append(&mut extra);
        ImputationResult {
            completed,
            indicators: self
                .spec
                .append_indicators
                .then(|| data.mask().missing_indicators()),
            warnings,
        }
    }

    fn group_fill(&self, attrs: &[bool]) -> Vec<f64> {
        (0..self.n_cols)
            .map(|j| {
                self.group_means
                    .iter()
                    .find_map(|cells| {
                        let len = cells.keys().next().map_or(0, String::len);
                        cells
                            .get(&key(&attrs[..len.min(attrs.len())]))
                            .and_then(|m| m[j])
                    })
                    .unwrap_or(self.population_means[j])
            })
            .collect()
    }

    fn fill_group_means(&self, data: &MaskedCohort, attrs: &[Vec<bool>]) -> DenseMatrix {
        let mut cache: HashMap<&[bool], Vec<f64>> = HashMap::new();
        let mut out = data.fill_missing(&self.population_means);
        for (i, a) in attrs.iter().enumerate() {
            let fill = cache
                .entry(a.as_slice())
                .or_insert_with(|| self.group_fill(a));
            for (j, &f) in fill.iter().enumerate() {
                if data.value(i, j).is_none() {
                    out.set(i, j, f);
                }
            }
        }
        out
    }

    fn transform_chain(
        &self,
        data: &MaskedCohort,
        attrs: &[Vec<bool>],
        chain: usize,
    ) -> DenseMatrix {
        let mut design = Design::new(
            data,
            &self.medians,
            attrs,
            self.spec.strategy == Strategy::GroupMice,
        );
        let mut rng = rng::stream(self.spec.seed, &[0x1A7E, chain as u64, 2]);
        let models = &self.chains[chain];
        let incomplete: Vec<usize> = (0..self.n_cols)
            .filter(|&k| !design.missing[k].is_empty())
            .collect();
        for _ in 0..self.spec.mice_iterations {
            for &k in &incomplete {
                design.refill(k, &models[k], self.spec.noise_draws, &mut rng);
            }
        }
        design.covariates()
    }
}

fn key(attrs: &[bool]) -> String {
    attrs.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Per-row grouping attributes: the audited group, then auxiliary
/// attributes when `intersectional`.
fn attribute_rows(data: &MaskedCohort, intersectional: bool) -> Vec<Vec<bool>> {
    (0..data.n_rows())
        .map(|i| {
            let mut a = vec![data.group()[i]];
            if intersectional {
                a.extend(data.auxiliary_groups().iter().map(|g| g.members[i]));
            }
            a
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Augmented design `[1, x_1..x_d, attributes]` of one chain with its Gram
/// matrix kept current as columns are refilled.
struct Design {
    n: usize,
    d: usize,
    width: usize,
    z: Vec<f64>,
    gram: Vec<f64>,
    missing: Vec<Vec<usize>>,
}

impl Design {
    fn new(data: &MaskedCohort, medians: &[f64], attrs: &[Vec<bool>], with_attrs: bool) -> Self {
        let n = data.n_rows();
        let d = data.n_cols();
        let n_attr = if with_attrs {
            attrs.first().map_or(0, Vec::len)
        } else {
            0
        };
        let width = 1 + d + n_attr;
        let mut z = vec![0.0; n * width];
        let mut missing = vec![Vec::new(); d];
        for i in 0..n {
            let row = &mut z[i * width..(i + 1) * width];
            row[0] = 1.0;
            for j in 0..d {
                row[1 + j] = match data.value(i, j) {
                    Some(v) => v,
                    None => {
                        missing[j].push(i);
                        medians[j]
                    }
                };
            }
            for a in 0..n_attr {
                row[1 + d + a] = attrs[i][a] as u8 as f64;
            }
        }
        let mut design = Self {
            n,
            d,
            width,
            z,
            gram: Vec::new(),
            missing,
        };
        design.gram = design.full_gram();
        design
    }

    fn full_gram(&self) -> Vec<f64> {
        let w = self.width;
        let mut g = vec![0.0; w * w];
        for i in 0..self.n {
            let r = &self.z[i * w..(i + 1) * w];
            for a in 0..w {
                for b in a..w {
                    g[a * w + b] += r[a] * r[b];
                }
            }
        }
        mirror_upper(&mut g, w);
        g
    }

    fn update_gram_column(&mut self, c: usize) {
        let w = self.width;
        let mut col = vec![0.0; w];
        for i in 0..self.n {
            let r = &self.z[i * w..(i + 1) * w];
            let v = r[c];
            for (acc, &x) in col.iter_mut().zip(r) {
                *acc += v * x;
            }
        }
        for (b, v) in col.into_iter().enumerate() {
            self.gram[c * w + b] = v;
            self.gram[b * w + c] = v;
        }
    }

    /// OLS of covariate `k` on every other design column, over the rows where
    /// `k` is observed.
    fn regress(&self, k: usize) -> Result<ColumnModel> {
        let w = self.width;
        let c = 1 + k;
        let mut g = self.gram.clone();
        for &i in &self.missing[k] {
            let r = &self.z[i * w..(i + 1) * w];
            for a in 0..w {
                for b in 0..w {
                    g[a * w + b] -= r[a] * r[b];
                }
            }
        }
        let predictors: Vec<usize> = (0..w).filter(|&a| a != c).collect();
        let p = predictors.len();
        let mut gpp = vec![0.0; p * p];
        let mut rhs = vec![0.0; p];
        for (a, &pa) in predictors.iter().enumerate() {
            rhs[a] = g[pa * w + c];
            for (b, &pb) in predictors.iter().enumerate() {
                gpp[a * p + b] = g[pa * w + pb];
            }
        }
        let coefficients = solve_symmetric(&gpp, &rhs, 0.0)?;
        let fitted_ss: f64 = (0..p)
            .map(|a| coefficients[a] * dot(&gpp[a * p..(a + 1) * p], &coefficients))
            .sum();
        let rss = (g[c * w + c] - 2.0 * dot(&coefficients, &rhs) + fitted_ss).max(0.0);
        let n_obs = self.n - self.missing[k].len();
        let dof = n_obs.saturating_sub(p).max(1);
        Ok(ColumnModel {
            predictors,
            coefficients,
            residual_std: (rss / dof as f64).sqrt(),
            fallback_mean: None,
        })
    }

    fn refill(&mut self, k: usize, model: &ColumnModel, noise: bool, rng: &mut rng::StreamRng) {
        let w = self.width;
        let c = 1 + k;
        for idx in 0..self.missing[k].len() {
            let i = self.missing[k][idx];
            let value = match model.fallback_mean {
                Some(m) => m,
                None => {
                    let r = &self.z[i * w..(i + 1) * w];
                    let pred: f64 = model
                        .predictors
                        .iter()
                        .zip(&model.coefficients)
                        .map(|(&a, &b)| r[a] * b)
                        .sum();
                    if noise {
                        pred + model.residual_std * rng::standard_normal(rng)
                    } else {
                        pred
                    }
                }
            };
            self.z[i * w + c] = value;
        }
    }

    fn covariates(&self) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.n * self.d);
        for i in 0..self.n {
            data.extend_from_slice(&self.z[i * self.width + 1..i * self.width + 1 + self.d]);
        }
        DenseMatrix::from_vec(self.n, self.d, data).expect("imputed values are finite")
    }
}

/// Fits the imputer on a training partition.
pub fn fit(train: &MaskedCohort, spec: &ImputerSpec) -> Result<FittedImputer> {
    fit_transform(train, spec).map(|(f, _)| f)
}

/// Fits the imputer and returns the completed training tables. For chained
/// strategies these are the final chain states rather than a re-imputation.
pub fn fit_transform(
    train: &MaskedCohort,
    spec: &ImputerSpec,
) -> Result<(FittedImputer, ImputationResult)> {
    spec.validate()?;
    let d = train.n_cols();
    let mut population_means = Vec::with_capacity(d);
    let mut medians = Vec::with_capacity(d);
    for j in 0..d {
        let mut obs = train.observed_column(j);
        if obs.is_empty() {
            return Err(Error::Precondition(format!(
                "covariate `{}` has no observed training values",
                train.covariate_names()[j]
            )));
        }
        population_means.push(obs.iter().sum::<f64>() / obs.len() as f64);
        medians.push(median(&mut obs));
    }

    let uses_groups = spec.strategy.uses_groups();
    let attrs = attribute_rows(train, spec.intersectional && uses_groups);
    let n_attributes = attrs.first().map_or(0, Vec::len);
    let mut warnings = Vec::new();

    let group_means = if spec.strategy == Strategy::GroupMean {
        let mut levels = Vec::new();
        for len in (1..=n_attributes).rev() {
            let mut sums: BTreeMap<String, (Vec<f64>, Vec<usize>)> = BTreeMap::new();
            for (i, a) in attrs.iter().enumerate() {
                let entry = sums
                    .entry(key(&a[..len]))
                    .or_insert_with(|| (vec![0.0; d], vec![0; d]));
                for j in 0..d {
                    if let Some(v) = train.value(i, j) {
                        entry.0[j] += v;
                        entry.1[j] += 1;
                    }
                }
            }
            let cells: BTreeMap<String, Vec<Option<f64>>> = sums
                .into_iter()
                .map(|(k, (s, c))| {
                    let means = s
                        .iter()
                        .zip(&c)
                        .map(|(s, &c)| (c > 0).then(|| s / c as f64))
                        .collect();
                    (k, means)
                })
                .collect();
            for (k, means) in &cells {
                for (j, m) in means.iter().enumerate() {
                    if m.is_none() {
                        warnings.push(format!(
                            "no observed `{}` in group cell {k}; falling back to a coarser mean",
                            train.covariate_names()[j]
                        ));
                    }
                }
            }
            levels.push(cells);
        }
        levels
    } else {
        Vec::new()
    };

    let mut fitted = FittedImputer {
        version: FORMAT_VERSION,
        spec: spec.clone(),
        n_cols: d,
        n_attributes: if uses_groups { n_attributes } else { 1 },
        population_means,
        medians,
        group_means,
        chains: Vec::new(),
        warnings,
    };

    let completed = match spec.strategy {
        Strategy::PopulationMean => vec![train.fill_missing(&fitted.population_means)],
        Strategy::GroupMean => vec![fitted.fill_group_means(train, &attrs)],
        Strategy::Mice | Strategy::GroupMice => {
            let with_attrs = spec.strategy == Strategy::GroupMice;
            let runs: Vec<(Vec<ColumnModel>, DenseMatrix, Vec<String>)> = (0..spec.mice_draws)
                .into_par_iter()
                .map(|chain| fit_chain(train, &fitted, &attrs, with_attrs, chain))
                .collect::<Result<_>>()?;
            let mut completed = Vec::with_capacity(runs.len());
            for (models, table, notes) in runs {
                fitted.chains.push(models);
                completed.push(table);
                for note in notes {
                    if !fitted.warnings.contains(&note) {
                        fitted.warnings.push(note);
                    }
                }
            }
            completed
        }
    };
    let result = fitted.finish(train, completed, Vec::new());
    Ok((fitted, result))
}

fn fit_chain(
    train: &MaskedCohort,
    fitted: &FittedImputer,
    attrs: &[Vec<bool>],
    with_attrs: bool,
    chain: usize,
) -> Result<(Vec<ColumnModel>, DenseMatrix, Vec<String>)> {
    let spec = &fitted.spec;
    let d = train.n_cols();
    let mut design = Design::new(train, &fitted.medians, attrs, with_attrs);
    let mut rng = rng::stream(spec.seed, &[0x1A7E, chain as u64, 1]);
    let min_rows = design.width + 1;
    let mut notes = Vec::new();

    let regressable = |design: &Design, k: usize| design.n - design.missing[k].len() >= min_rows;
    let fallback = |k: usize| ColumnModel {
        predictors: Vec::new(),
        coefficients: Vec::new(),
        residual_std: 0.0,
        fallback_mean: Some(fitted.population_means[k]),
    };

    let incomplete: Vec<usize> = (0..d).filter(|&k| !design.missing[k].is_empty()).collect();
    let mut models: Vec<Option<ColumnModel>> = vec![None; d];
    for _ in 0..spec.mice_iterations {
        for &k in &incomplete {
            let model = if regressable(&design, k) {
                design.regress(k)?
            } else {
                notes.push(format!(
                    "too few observed `{}` rows for a regression; mean imputation used",
                    train.covariate_names()[k]
                ));
                fallback(k)
            };
            design.refill(k, &model, spec.noise_draws, &mut rng);
            design.update_gram_column(1 + k);
            models[k] = Some(model);
        }
    }
    // Complete columns still get a regression so that transform can fill
    // them in other partitions.
    let mut out = Vec::with_capacity(d);
    for (k, m) in models.into_iter().enumerate() {
        out.push(match m {
            Some(m) => m,
            None if regressable(&design, k) => design.regress(k)?,
            None => fallback(k),
        });
    }
    notes.dedup();
    Ok((out, design.covariates(), notes))
}
