//! Core tabular types: the complete ground-truth [`Cohort`], its
//! [`ObservationMask`], the [`MaskedCohort`] view imputation works on, and
//! row partitioning.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{rng, DenseMatrix};

/// A named binary attribute (e.g. sex or insurance) carried next to the
/// audited group so that group-conditional imputers can use intersections.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAttribute {
    pub name: String,
    pub members: Vec<bool>,
}

/// Complete covariates with binary group (`true` = marginalised) and binary
/// outcome (`true` = positive case).
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    covariates: DenseMatrix,
    group: Vec<bool>,
    outcome: Vec<bool>,
    covariate_names: Vec<String>,
    auxiliary_groups: Vec<GroupAttribute>,
}

impl Cohort {
    pub fn new(covariates: DenseMatrix, group: Vec<bool>, outcome: Vec<bool>) -> Result<Self> {
        let n = covariates.rows();
        if n == 0 || covariates.cols() == 0 {
            return Err(Error::Precondition(
                "a cohort needs at least one row and one covariate".into(),
            ));
        }
        if group.len() != n || outcome.len() != n {
            return Err(Error::Schema(format!(
                "{n} covariate rows but {} group and {} outcome labels",
                group.len(),
                outcome.len()
            )));
        }
        let covariate_names = (0..covariates.cols())
            .map(|j| format!("x{}", j + 1))
            .collect();
        Ok(Self {
            covariates,
            group,
            outcome,
            covariate_names,
            auxiliary_groups: Vec::new(),
        })
    }

    pub fn with_covariate_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_cols() {
            return Err(Error::Schema(format!(
                "{} names for {} covariates",
                names.len(),
                self.n_cols()
            )));
        }
        self.covariate_names = names;
        Ok(self)
    }

    pub fn with_auxiliary_groups(mut self, groups: Vec<GroupAttribute>) -> Result<Self> {
        if let Some(bad) = groups.iter().find(|g| g.members.len() != self.n_rows()) {
            return Err(Error::Schema(format!(
                "auxiliary group `{}` has {} labels for {} rows",
                bad.name,
                bad.members.len(),
                self.n_rows()
            )));
        }
        self.auxiliary_groups = groups;
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.covariates.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.covariates.cols()
    }

    pub fn covariates(&self) -> &DenseMatrix {
        &self.covariates
    }

    pub fn group(&self) -> &[bool] {
        &self.group
    }

    pub fn outcome(&self) -> &[bool] {
        &self.outcome
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn auxiliary_groups(&self) -> &[GroupAttribute] {
        &self.auxiliary_groups
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            covariates: self.covariates.select_rows(indices),
            group: indices.iter().map(|&i| self.group[i]).collect(),
            outcome: indices.iter().map(|&i| self.outcome[i]).collect(),
            covariate_names: self.covariate_names.clone(),
            auxiliary_groups: self
                .auxiliary_groups
                .iter()
                .map(|g| GroupAttribute {
                    name: g.name.clone(),
                    members: indices.iter().map(|&i| g.members[i]).collect(),
                })
                .collect(),
        }
    }

    /// Replaces the covariate matrix, keeping labels and names.
    pub(crate) fn with_covariates(&self, covariates: DenseMatrix) -> Self {
        debug_assert_eq!(covariates.rows(), self.n_rows());
        debug_assert_eq!(covariates.cols(), self.n_cols());
        Self {
            covariates,
            ..self.clone()
        }
    }
}

/// Observation indicators; `true` means the entry is observed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn fully_observed(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            observed: vec![true; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, observed: Vec<bool>) -> Result<Self> {
        if observed.len() != rows * cols {
            return Err(Error::Schema(format!(
                "mask has {} entries, expected {rows}x{cols}",
                observed.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            observed,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.observed[row * self.cols + col]
    }

    #[inline]
    pub(crate) fn set_observed(&mut self, row: usize, col: usize, observed: bool) {
        self.observed[row * self.cols + col] = observed;
    }

    pub fn observed_count(&self, col: usize) -> usize {
        (0..self.rows).filter(|&i| self.is_observed(i, col)).count()
    }

    pub fn missing_count(&self) -> usize {
        self.observed.iter().filter(|o| !**o).count()
    }

    pub fn observation_rate(&self, col: usize) -> f64 {
        self.observed_count(col) as f64 / self.rows as f64
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut observed = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            observed.extend_from_slice(&self.observed[i * self.cols..(i + 1) * self.cols]);
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            observed,
        }
    }

    /// Missingness indicators as a 0/1 matrix (1 = missing).
    pub fn missing_indicators(&self) -> DenseMatrix {
        let data = self
            .observed
            .iter()
            .map(|&o| if o { 0.0 } else { 1.0 })
            .collect();
        DenseMatrix::from_vec(self.rows, self.cols, data).expect("indicator values are finite")
    }
}

/// A cohort seen through its observation mask.
///
/// Only observed entries are readable through the public API. The hidden
/// ground truth is reachable crate-internally, and only when it is known
/// (simulated cohorts); ingested files carry placeholders at missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedCohort {
    cohort: Cohort,
    mask: ObservationMask,
    truth_known: bool,
}

impl MaskedCohort {
    pub fn new(cohort: Cohort, mask: ObservationMask) -> Result<Self> {
        Self::build(cohort, mask, true)
    }

    /// For data whose missing entries were never observed by anyone; the
    /// values stored at masked positions are placeholders.
    pub fn from_incomplete(cohort: Cohort, mask: ObservationMask) -> Result<Self> {
        Self::build(cohort, mask, false)
    }

    fn build(cohort: Cohort, mask: ObservationMask, truth_known: bool) -> Result<Self> {
        if mask.rows() != cohort.n_rows() || mask.cols() != cohort.n_cols() {
            return Err(Error::Schema(format!(
                "mask is {}x{} but cohort is {}x{}",
                mask.rows(),
                mask.cols(),
                cohort.n_rows(),
                cohort.n_cols()
            )));
        }
        Ok(Self {
            cohort,
            mask,
            truth_known,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.cohort.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.cohort.n_cols()
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    pub fn group(&self) -> &[bool] {
        self.cohort.group()
    }

    pub fn outcome(&self) -> &[bool] {
        self.cohort.outcome()
    }

    pub fn covariate_names(&self) -> &[String] {
        self.cohort.covariate_names()
    }

    pub fn auxiliary_groups(&self) -> &[GroupAttribute] {
        self.cohort.auxiliary_groups()
    }

    pub fn truth_known(&self) -> bool {
        self.truth_known
    }

    /// The value at `(row, col)` if it is observed.
    #[inline]
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.mask
            .is_observed(row, col)
            .then(|| self.cohort.covariates().get(row, col))
    }

    /// Observed values of one covariate, in row order.
    pub fn observed_column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows())
            .filter_map(|i| self.value(i, col))
            .collect()
    }

    /// Covariates with every missing entry replaced by `fill[col]`.
    pub fn fill_missing(&self, fill: &[f64]) -> DenseMatrix {
        assert_eq!(fill.len(), self.n_cols());
        let mut out = DenseMatrix::zeros(self.n_rows(), self.n_cols());
        for i in 0..self.n_rows() {
            for (j, &f) in fill.iter().enumerate() {
                out.set(i, j, self.value(i, j).unwrap_or(f));
            }
        }
        out
    }

    pub(crate) fn truth(&self) -> Option<&Cohort> {
        self.truth_known.then_some(&self.cohort)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            cohort: self.cohort.select_rows(indices),
            mask: self.mask.select_rows(indices),
            truth_known: self.truth_known,
        }
    }

    /// Applies a per-covariate affine map `(x - shift) / scale` to every entry.
    pub fn standardised(&self, shift: &[f64], scale: &[f64]) -> Self {
        let x = self.cohort.covariates();
        let mut out = x.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                out.set(i, j, (x.get(i, j) - shift[j]) / scale[j]);
            }
        }
        Self {
            cohort: self.cohort.with_covariates(out),
            mask: self.mask.clone(),
            truth_known: self.truth_known,
        }
    }

    /// Replaces the audited group with another binary attribute.
    pub fn with_group(&self, group: Vec<bool>) -> Result<Self> {
        if group.len() != self.n_rows() {
            return Err(Error::Schema("group length differs from row count".into()));
        }
        let mut out = self.clone();
        out.cohort.group = group;
        Ok(out)
    }
}

/// Completed covariate tables produced by an imputer.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    /// One completed `n x d` matrix per imputation draw.
    pub completed: Vec<DenseMatrix>,
    /// Missingness indicators (1 = missing) when requested.
    pub indicators: Option<DenseMatrix>,
    /// Non-fatal notes, e.g. regression fallbacks.
    pub warnings: Vec<String>,
}

impl ImputationResult {
    pub fn n_draws(&self) -> usize {
        self.completed.len()
    }

    pub fn n_rows(&self) -> usize {
        self.completed.first().map_or(0, DenseMatrix::rows)
    }

    pub fn indicators_appended(&self) -> bool {
        self.indicators.is_some()
    }

    /// Model features for one draw: completed covariates, then indicators.
    pub fn features(&self, draw: usize) -> DenseMatrix {
        let base = &self.completed[draw];
        match &self.indicators {
            Some(ind) => base.hstack(ind).expect("indicator rows match"),
            None => base.clone(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.completed.first().map_or(0, DenseMatrix::cols)
            + self.indicators.as_ref().map_or(0, DenseMatrix::cols)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            completed: self
                .completed
                .iter()
                .map(|m| m.select_rows(indices))
                .collect(),
            indicators: self.indicators.as_ref().map(|m| m.select_rows(indices)),
            warnings: self.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub tune_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, tune: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            train_fraction: train,
            tune_fraction: tune,
            test_fraction: test,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.fractions();
        if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config(format!(
                "split fractions must lie in [0, 1]: {f:?}"
            )));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "split fractions must sum to 1: {f:?}"
            )));
        }
        if self.train_fraction == 0.0 {
            return Err(Error::Config("train fraction must be positive".into()));
        }
        Ok(())
    }

    pub fn fractions(&self) -> [f64; 3] {
        [self.train_fraction, self.tune_fraction, self.test_fraction]
    }

    /// Partition sizes by largest-remainder rounding. Equal remainders favour
    /// the later partition, so test and tune sets are not shortchanged.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let exact = self.fractions().map(|f| f * n as f64);
        let mut sizes = exact.map(|e| e.floor() as usize);
        let assigned: usize = sizes.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(b.cmp(&a))
        });
        for &k in order.iter().take(n.saturating_sub(assigned)) {
            sizes[k] += 1;
        }
        sizes
    }
}

/// Row partition of a masked cohort. A partition whose fraction is zero is
/// `None`.
#[derive(Debug, Clone)]
pub struct Partitions {
    pub train: MaskedCohort,
    pub tune: Option<MaskedCohort>,
    pub test: Option<MaskedCohort>,
    /// Original row indices of train, tune and test.
    pub indices: [Vec<usize>; 3],
}

pub fn split(cohort: &Cohort, mask: &ObservationMask, spec: &SplitSpec) -> Result<Partitions> {
    let masked = MaskedCohort::new(cohort.clone(), mask.clone())?;
    split_masked(&masked, spec)
}

/// Seeded row-uniform shuffle followed by contiguous slicing.
pub fn split_masked(data: &MaskedCohort, spec: &SplitSpec) -> Result<Partitions> {
    spec.validate()?;
    let n = data.n_rows();
    let sizes = spec.sizes(n);
    for (k, (&size, &frac)) in sizes.iter().zip(&spec.fractions()).enumerate() {
        if frac > 0.0 && size == 0 {
            return Err(Error::Config(format!(
                "{} partition would be empty for n = {n}",
                ["train", "tune", "test"][k]
            )));
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(spec.seed, &[0x5EED_5917]));

    let train_idx = perm[..sizes[0]].to_vec();
    let tune_idx = perm[sizes[0]..sizes[0] + sizes[1]].to_vec();
    let test_idx = perm[sizes[0] + sizes[1]..].to_vec();

    let part = |idx: &Vec<usize>| (!idx.is_empty()).then(|| data.select_rows(idx));
    Ok(Partitions {
        train: data.select_rows(&train_idx),
        tune: part(&tune_idx),
        test: part(&test_idx),
        indices: [train_idx, tune_idx, test_idx],
    })
}
