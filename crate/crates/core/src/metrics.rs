//! Group-fairness measurements. Every gap is marginalised minus rest.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ImputationResult, ObservationMask};
use crate::error::{Error, Result};
use crate::numeric::{rng, DenseMatrix};

/// A metric over all rows and per group, indexed `[rest, marginalised]`.
/// Undefined values (empty denominators) are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMetric {
    pub overall: Option<f64>,
    pub per_group: [Option<f64>; 2],
    pub gap: Option<f64>,
}

impl GroupMetric {
    pub fn new(overall: Option<f64>, rest: Option<f64>, marginalised: Option<f64>) -> Self {
        let gap = match (marginalised, rest) {
            (Some(m), Some(r)) => Some(m - r),
            _ => None,
        };
        Self {
            overall,
            per_group: [rest, marginalised],
            gap,
        }
    }

    pub fn rest(&self) -> Option<f64> {
        self.per_group[0]
    }

    pub fn marginalised(&self) -> Option<f64> {
        self.per_group[1]
    }

    /// `[overall, rest, marginalised, gap]`, the order used in reports.
    pub fn fields(&self) -> [Option<f64>; 4] {
        [self.overall, self.per_group[0], self.per_group[1], self.gap]
    }
}

/// Field labels matching [`GroupMetric::fields`].
pub const GROUP_FIELDS: [&str; 4] = ["overall", "rest", "marginalised", "gap"];

fn check_lengths(n: usize, others: &[usize]) -> Result<()> {
    if others.iter().any(|&m| m != n) {
        return Err(Error::Schema("metric inputs differ in length".into()));
    }
    if n == 0 {
        return Err(Error::Undefined("metric over zero rows".into()));
    }
    Ok(())
}

/// Mean squared error between imputed and true values over the missing
/// entries, averaged over draws. `covariate` restricts to one column.
pub fn reconstruction_error(
    truth: &DenseMatrix,
    mask: &ObservationMask,
    result: &ImputationResult,
    group: &[bool],
    covariate: Option<usize>,
) -> Result<GroupMetric> {
    let n = truth.rows();
    check_lengths(n, &[mask.rows(), result.n_rows(), group.len()])?;
    if let Some(c) = covariate {
        if c >= truth.cols() {
            return Err(Error::Schema(format!("covariate index {c} out of range")));
        }
    }
    let cols: Vec<usize> = match covariate {
        Some(c) => vec![c],
        None => (0..truth.cols()).collect(),
    };
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for completed in &result.completed {
        for i in 0..n {
            let g = group[i] as usize;
            for &j in &cols {
                if !mask.is_observed(i, j) {
                    let e = completed.get(i, j) - truth.get(i, j);
                    sums[g] += e * e;
                    counts[g] += 1;
                }
            }
        }
    }
    if counts[0] + counts[1] == 0 {
        return Err(Error::Undefined("no missing entries to evaluate".into()));
    }
    let mean = |s: f64, c: usize| (c > 0).then(|| s / c as f64);
    Ok(GroupMetric::new(
        mean(sums[0] + sums[1], counts[0] + counts[1]),
        mean(sums[0], counts[0]),
        mean(sums[1], counts[1]),
    ))
}

/// Mann–Whitney AUC with half credit for ties; `None` without both classes.
pub fn auc_score(scores: &[f64], outcomes: &[bool]) -> Option<f64> {
    let n_pos = outcomes.iter().filter(|&&y| y).count();
    let n_neg = outcomes.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start..end (1-based: start+1..=end) share their average.
        let avg = (start + 1 + end) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| outcomes[i]).count();
        rank_sum += avg * positives as f64;
        start = end;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

fn check_scores(scores: &[f64]) -> Result<()> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    Ok(())
}

/// Overall and per-group AUC. A single-class overall set is an error; a
/// single-class group is only undefined.
pub fn auc(scores: &[f64], outcomes: &[bool], groups: &[bool]) -> Result<GroupMetric> {
    check_lengths(scores.len(), &[outcomes.len(), groups.len()])?;
    check_scores(scores)?;
    let overall = auc_score(scores, outcomes)
        .ok_or_else(|| Error::Undefined("AUC needs both outcome classes".into()))?;
    let per = |g: bool| {
        let (s, y): (Vec<f64>, Vec<bool>) = (0..scores.len())
            .filter(|&i| groups[i] == g)
            .map(|i| (scores[i], outcomes[i]))
            .unzip();
        auc_score(&s, &y)
    };
    Ok(GroupMetric::new(Some(overall), per(false), per(true)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub fnr: GroupMetric,
    pub prioritisation: GroupMetric,
}

/// Number of rows prioritised at `capacity`: `⌈capacity·n⌉`, robust to
/// products that land a rounding error above an integer.
pub fn capacity_count(capacity: f64, n: usize) -> usize {
    ((capacity * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Rows prioritised at `capacity`: the highest scores, ties to the lower
/// row index.
pub fn prioritised(scores: &[f64], capacity: f64) -> Result<Vec<bool>> {
    if !(capacity > 0.0 && capacity <= 1.0) {
        return Err(Error::Precondition(format!(
            "capacity {capacity} outside (0, 1]"
        )));
    }
    check_scores(scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut selected = vec![false; scores.len()];
    for &i in &order[..capacity_count(capacity, scores.len())] {
        selected[i] = true;
    }
    Ok(selected)
}

/// False-negative rate and prioritisation rate under top-k allocation.
pub fn threshold_metrics(
    scores: &[f64],
    outcomes: &[bool],
    groups: &[bool],
    capacity: f64,
) -> Result<ThresholdMetrics> {
    check_lengths(scores.len(), &[outcomes.len(), groups.len()])?;
    let selected = prioritised(scores, capacity)?;
    // [rest, marginalised, all] × (rows, selected, positives, missed positives)
    let mut tally = [[0usize; 4]; 3];
    for i in 0..scores.len() {
        for slot in [groups[i] as usize, 2] {
            let t = &mut tally[slot];
            t[0] += 1;
            t[1] += selected[i] as usize;
            if outcomes[i] {
                t[2] += 1;
                t[3] += !selected[i] as usize;
            }
        }
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    let fnr = |t: &[usize; 4]| ratio(t[3], t[2]);
    let prio = |t: &[usize; 4]| ratio(t[1], t[0]);
    Ok(ThresholdMetrics {
        fnr: GroupMetric::new(fnr(&tally[2]), fnr(&tally[0]), fnr(&tally[1])),
        prioritisation: GroupMetric::new(prio(&tally[2]), prio(&tally[0]), prio(&tally[1])),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub std: f64,
    pub lower: f64,
    pub upper: f64,
    /// Resamples where the value was defined.
    pub n_resamples: usize,
    pub undefined: usize,
}

/// Mean, sample standard deviation and 2.5/97.5 percentile bounds of a set
/// of replicate values.
pub fn summarise(values: &[f64], undefined: usize) -> Result<BootstrapSummary> {
    if values.is_empty() {
        return Err(Error::Undefined("no defined replicate values".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Percentiles can straddle the mean only with extreme skew; clamp so the
    // interval always contains it.
    let lower = percentile(&sorted, 2.5).min(mean);
    let upper = percentile(&sorted, 97.5).max(mean);
    Ok(BootstrapSummary {
        mean,
        std,
        lower,
        upper,
        n_resamples: n,
        undefined,
    })
}

/// Linear-interpolation percentile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Row indices of bootstrap resample `r`: `n_rows` draws with replacement.
pub fn resample_indices(n_rows: usize, seed: u64, r: usize) -> Vec<usize> {
    let mut g = rng::stream(seed, &[0xB007, r as u64]);
    (0..n_rows)
        .map(|_| ((rng::uniform(&mut g) * n_rows as f64) as usize).min(n_rows - 1))
        .collect()
}

/// Metric values on the full row set and on each resample, in resample
/// order.
pub fn bootstrap_replicates<F>(
    n_rows: usize,
    n_resamples: usize,
    seed: u64,
    metric: F,
) -> (Vec<Option<f64>>, Vec<Vec<Option<f64>>>)
where
    F: Fn(&[usize]) -> Vec<Option<f64>> + Sync,
{
    let all: Vec<usize> = (0..n_rows).collect();
    let full = metric(&all);
    if n_rows == 0 {
        return (full, Vec::new());
    }
    let replicates = (0..n_resamples)
        .into_par_iter()
        .map(|r| metric(&resample_indices(n_rows, seed, r)))
        .collect();
    (full, replicates)
}

/// Bootstraps a vector-valued metric over `n_rows` rows. `metric` receives
/// the resampled row indices and returns one optional value per field.
/// Per field: undefined on the full set → `Undefined`; more than half the
/// resamples undefined → `Unreliable`.
pub fn bootstrap<F>(
    n_rows: usize,
    n_resamples: usize,
    seed: u64,
    metric: F,
) -> Vec<Result<BootstrapSummary>>
where
    F: Fn(&[usize]) -> Vec<Option<f64>> + Sync,
{
    let (full, replicates) = bootstrap_replicates(n_rows, n_resamples, seed, metric);
    full.iter()
        .enumerate()
        .map(|(f, value)| {
            if value.is_none() || replicates.is_empty() {
                return Err(Error::Undefined(
                    "metric undefined on the full test set".into(),
                ));
            }
            let values: Vec<f64> = replicates
                .iter()
                .filter_map(|rep| rep.get(f).copied().flatten())
                .collect();
            let undefined = n_resamples - values.len();
            if 2 * undefined > n_resamples {
                return Err(Error::Unreliable {
                    undefined,
                    total: n_resamples,
                });
            }
            summarise(&values, undefined)
        })
        .collect()
}

/// Row-subset view helper for bootstrap closures.
pub fn gather<T: Copy>(values: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| values[i]).collect()
}
