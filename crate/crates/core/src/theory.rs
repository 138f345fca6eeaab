//! Closed-form reconstruction errors of group-mean and population-mean
//! imputation for one covariate, the conditions under which either strategy
//! is worse or fairer, and empirical validators.
//!
//! Notation: `g` is the marginalised group and `¬g` the rest. For a group,
//! `α` is the observation rate, `ρ = Corr(O, X)` the point-biserial
//! correlation between the observation indicator and the covariate, `μ` and
//! `σ` the covariate's true mean and standard deviation, and `μ^O` its
//! observed mean. `r` is the marginalised share of the population.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Cohort;
use crate::error::{Error, Result};
use crate::missingness::{
    apply_calibrated, latent_correlation, max_attainable_correlation, CalibratedMechanismSpec,
};
use crate::numeric::normal::upper_truncated_variance;
use crate::numeric::{normal_cdf_inv, rng, DenseMatrix};

/// Tolerance for reconciling over-specified means.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// Caller-facing description of one group. Exactly one of `mean` and
/// `observed_mean` is needed; when both are given they must agree.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupSpec {
    pub alpha: f64,
    pub rho: f64,
    pub sd: f64,
    #[serde(default)]
    pub mean: Option<f64>,
    #[serde(default)]
    pub observed_mean: Option<f64>,
    /// `Var(X | ¬O)`; derived from a Gaussian covariate under latent-threshold
    /// missingness when absent.
    #[serde(default)]
    pub unobserved_variance: Option<f64>,
}

/// Fully resolved parameters of one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    pub alpha: f64,
    pub rho: f64,
    pub sd: f64,
    pub mean: f64,
    pub observed_mean: f64,
    pub unobserved_variance: f64,
}

impl GroupParams {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Singular(format!(
                "observation rate {} must lie in (0, 1)",
                self.alpha
            )));
        }
        if !(self.sd > 0.0) || !self.sd.is_finite() {
            return Err(Error::Singular(format!(
                "standard deviation {} must be positive",
                self.sd
            )));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::Precondition(format!(
                "correlation {} outside [-1, 1]",
                self.rho
            )));
        }
        if !(self.unobserved_variance >= 0.0) || !self.unobserved_variance.is_finite() {
            return Err(Error::Precondition(
                "unobserved variance must be finite and >= 0".into(),
            ));
        }
        if !self.mean.is_finite() || !self.observed_mean.is_finite() {
            return Err(Error::NonFinite("group mean"));
        }
        Ok(())
    }

    /// `sqrt((1 − α)/α)·σ`, the observed-mean shift per unit of `ρ`.
    fn observed_shift(alpha: f64, sd: f64) -> f64 {
        ((1.0 - alpha) / alpha).sqrt() * sd
    }

    /// Group-mean imputation bias `E[X|¬O] − μ^O = −ρσ/sqrt(α(1 − α))`.
    pub fn group_bias(&self) -> f64 {
        -self.rho * self.sd / (self.alpha * (1.0 - self.alpha)).sqrt()
    }

    /// `E[X | ¬O]`.
    pub fn unobserved_mean(&self) -> f64 {
        self.mean - self.rho * self.sd * (self.alpha / (1.0 - self.alpha)).sqrt()
    }
}

/// Variance of the missing values of a Gaussian covariate whose observation
/// indicator follows a latent Gaussian threshold with `Corr(O, X) = ρ`.
pub fn gaussian_unobserved_variance(alpha: f64, rho: f64, sd: f64) -> Result<f64> {
    let r = latent_correlation(alpha, rho)?;
    let z = normal_cdf_inv(alpha)?;
    Ok(sd * sd * (1.0 - r * r * (1.0 - upper_truncated_variance(z))))
}

fn resolve(spec: &GroupSpec) -> Result<GroupParams> {
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        return Err(Error::Singular(format!(
            "observation rate {} must lie in (0, 1)",
            spec.alpha
        )));
    }
    if !(spec.sd > 0.0) {
        return Err(Error::Singular(format!(
            "standard deviation {} must be positive",
            spec.sd
        )));
    }
    let shift = spec.rho * GroupParams::observed_shift(spec.alpha, spec.sd);
    let (mean, observed_mean) = match (spec.mean, spec.observed_mean) {
        (Some(m), None) => (m, m + shift),
        (None, Some(o)) => (o - shift, o),
        (Some(m), Some(o)) => {
            if (m + shift - o).abs() > CONSISTENCY_TOLERANCE {
                return Err(Error::Precondition(format!(
                    "observed mean {o} is inconsistent with true mean {m} (expected {})",
                    m + shift
                )));
            }
            (m, o)
        }
        (None, None) => {
            return Err(Error::Precondition(
                "a true or an observed mean is required".into(),
            ))
        }
    };
    let unobserved_variance = match spec.unobserved_variance {
        Some(v) => v,
        None => gaussian_unobserved_variance(spec.alpha, spec.rho, spec.sd)?,
    };
    let params = GroupParams {
        alpha: spec.alpha,
        rho: spec.rho,
        sd: spec.sd,
        mean,
        observed_mean,
        unobserved_variance,
    };
    params.validate()?;
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremInputs {
    marginalised: GroupParams,
    rest: GroupParams,
    ratio: f64,
}

impl TheoremInputs {
    /// `ratio` is the marginalised share `r ∈ (0, 1)`.
    pub fn new(ratio: f64, marginalised: GroupSpec, rest: GroupSpec) -> Result<Self> {
        let inputs = Self {
            marginalised: resolve(&marginalised)?,
            rest: resolve(&rest)?,
            ratio,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Precondition(format!(
                "group ratio {} must lie in (0, 1)",
                self.ratio
            )));
        }
        self.marginalised.validate()?;
        self.rest.validate()
    }

    pub fn marginalised(&self) -> &GroupParams {
        &self.marginalised
    }

    pub fn rest(&self) -> &GroupParams {
        &self.rest
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Overall observation rate `α = α_g·r + α_¬g·(1 − r)`.
    pub fn alpha(&self) -> f64 {
        self.marginalised.alpha * self.ratio + self.rest.alpha * (1.0 - self.ratio)
    }

    /// Population observed mean `μ^O`.
    pub fn observed_mean(&self) -> f64 {
        let wg = self.marginalised.alpha * self.ratio;
        let wn = self.rest.alpha * (1.0 - self.ratio);
        (wg * self.marginalised.observed_mean + wn * self.rest.observed_mean) / (wg + wn)
    }

    /// Copy with new correlations, holding the observed means fixed and
    /// re-deriving true means. Unobserved variances are kept.
    pub fn with_correlations_fixed_observed(&self, rho_g: f64, rho_ng: f64) -> Result<Self> {
        let spec = |p: &GroupParams, rho: f64| GroupSpec {
            alpha: p.alpha,
            rho,
            sd: p.sd,
            mean: None,
            observed_mean: Some(p.observed_mean),
            unobserved_variance: Some(p.unobserved_variance),
        };
        Self::new(
            self.ratio,
            spec(&self.marginalised, rho_g),
            spec(&self.rest, rho_ng),
        )
    }
}

/// `B_g^group` of the marginalised group.
pub fn group_bias(inputs: &TheoremInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(inputs.marginalised.group_bias())
}

/// `B_g^pop = B_g^group + μ_g^O − μ^O`.
pub fn population_bias(inputs: &TheoremInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(
        inputs.marginalised.group_bias() + inputs.marginalised.observed_mean
            - inputs.observed_mean(),
    )
}

/// `γ`: the between-group difference of observed means expressed through
/// true means and missingness, `μ_g^O − μ_¬g^O`.
pub fn gamma(inputs: &TheoremInputs) -> f64 {
    let (g, n) = (&inputs.marginalised, &inputs.rest);
    g.rho * GroupParams::observed_shift(g.alpha, g.sd) + g.mean
        - n.mean
        - n.rho * GroupParams::observed_shift(n.alpha, n.sd)
}

/// `B_g^pop` through the expanded form `B_g^group + α_¬g(1 − r)/α · γ`.
pub fn population_bias_expanded(inputs: &TheoremInputs) -> Result<f64> {
    inputs.validate()?;
    let w = inputs.rest.alpha * (1.0 - inputs.ratio) / inputs.alpha();
    Ok(inputs.marginalised.group_bias() + w * gamma(inputs))
}

/// Expected squared error of filling missing values with the constant `c`:
/// `(E[X|¬O] − c)² + Var(X|¬O)`.
pub fn constant_imputation_error(unobserved_mean: f64, unobserved_variance: f64, c: f64) -> f64 {
    (unobserved_mean - c).powi(2) + unobserved_variance
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionPair {
    /// `L^group = B² + Var(X|¬O)`.
    pub group: f64,
    /// `L^pop = (B + μ_g^O − μ^O)² + Var(X|¬O)`.
    pub population: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub marginalised: ReconstructionPair,
    pub rest: ReconstructionPair,
    /// `Δ^group = L_g^group − L_¬g^group`.
    pub delta_group: f64,
    /// `Δ^pop = L_g^pop − L_¬g^pop`.
    pub delta_pop: f64,
}

fn pair(p: &GroupParams, population_mean: f64) -> ReconstructionPair {
    let b = p.group_bias();
    ReconstructionPair {
        group: b * b + p.unobserved_variance,
        population: (b + p.observed_mean - population_mean).powi(2) + p.unobserved_variance,
    }
}

pub fn reconstruction_closed_form(inputs: &TheoremInputs) -> Result<ClosedForm> {
    inputs.validate()?;
    let mu = inputs.observed_mean();
    let g = pair(&inputs.marginalised, mu);
    let n = pair(&inputs.rest, mu);
    Ok(ClosedForm {
        marginalised: g,
        rest: n,
        delta_group: g.group - n.group,
        delta_pop: g.population - n.population,
    })
}

/// Whether group-mean imputation reconstructs the marginalised group worse
/// than population-mean imputation: with `q = ρ_g/sqrt(α_g(1 − α_g))` and
/// `t = (μ_g^O − μ^O)/(2σ_g)`, true iff `q < t < 0` or `0 < t < q`.
pub fn theorem2_predicate(inputs: &TheoremInputs) -> Result<bool> {
    inputs.validate()?;
    let g = &inputs.marginalised;
    let q = g.rho / (g.alpha * (1.0 - g.alpha)).sqrt();
    let t = (g.observed_mean - inputs.observed_mean()) / (2.0 * g.sd);
    Ok((q < t && t < 0.0) || (0.0 < t && t < q))
}

fn f_coef(a: f64, r: f64, b: f64) -> f64 {
    2.0 * b * (1.0 - r) / (a * (1.0 - a)).sqrt() - ((1.0 - a) / a).sqrt() * (b * (1.0 - r) - a * r)
}

fn e_coef(a: f64) -> f64 {
    (a / (1.0 - a)).sqrt()
}

fn h_coef(a: f64, r: f64, b: f64) -> f64 {
    (a * r + b * (1.0 - r)) / (a * (1.0 - a)).sqrt()
        - ((1.0 - a) / a).sqrt() * (b * (1.0 - r) - a * r)
}

/// Whether both strategies penalise the marginalised group and group-mean
/// imputation does so more (`Δ^group > Δ^pop > 0`), through the three-inequality
/// systems in `f`, `e` and `h`.
///
/// Requires equal unobserved variances across groups and `μ_g^O > μ^O`;
/// otherwise returns an assumption error.
pub fn theorem3_predicate(inputs: &TheoremInputs) -> Result<bool> {
    inputs.validate()?;
    let (g, n, r) = (&inputs.marginalised, &inputs.rest, inputs.ratio);
    let scale = g
        .unobserved_variance
        .abs()
        .max(n.unobserved_variance.abs())
        .max(1.0);
    if (g.unobserved_variance - n.unobserved_variance).abs() > 1e-12 * scale {
        return Err(Error::Assumption(
            "unobserved variances must be equal across groups".into(),
        ));
    }
    if !(g.observed_mean > inputs.observed_mean()) {
        return Err(Error::Assumption(
            "marginalised observed mean must exceed the population observed mean".into(),
        ));
    }
    let rhs = ((1.0 - r) * n.alpha - r * g.alpha) * (g.mean - n.mean);
    let first = g.rho * g.sd * f_coef(g.alpha, r, n.alpha)
        + n.rho * n.sd * f_coef(n.alpha, 1.0 - r, g.alpha)
        > rhs;
    let e_side = g.rho * g.sd * e_coef(g.alpha) - n.rho * n.sd * e_coef(n.alpha);
    let h_side = g.rho * g.sd * h_coef(g.alpha, r, n.alpha)
        + n.rho * n.sd * h_coef(n.alpha, 1.0 - r, g.alpha);
    let diff = g.mean - n.mean;
    Ok(first && ((e_side > diff && h_side > rhs) || (e_side < diff && h_side < rhs)))
}

/// Draws assumption-free random inputs: `α ∈ [0.05, 0.95]`, `ρ` uniform
/// within the latent-threshold bound, `σ ∈ [0.1, 3]`, `r ∈ [0.01, 0.5]`,
/// true means in `[−2, 2]` and Gaussian unobserved variances.
pub fn sample_inputs<R: rand::Rng + ?Sized>(g: &mut R) -> TheoremInputs {
    loop {
        let mut spec = || -> Result<GroupSpec> {
            let alpha = 0.05 + 0.9 * rng::uniform(g);
            let bound = max_attainable_correlation(alpha)?;
            Ok(GroupSpec {
                alpha,
                rho: bound * (2.0 * rng::uniform(g) - 1.0),
                sd: 0.1 + 2.9 * rng::uniform(g),
                mean: Some(4.0 * rng::uniform(g) - 2.0),
                observed_mean: None,
                unobserved_variance: None,
            })
        };
        let (Ok(a), Ok(b)) = (spec(), spec()) else {
            continue;
        };
        let ratio = 0.01 + 0.49 * rng::uniform(g);
        if let Ok(inputs) = TheoremInputs::new(ratio, a, b) {
            return inputs;
        }
    }
}

/// Random inputs satisfying the assumptions of [`theorem3_predicate`]: a
/// shared unobserved variance and `μ_g^O > μ^O`.
pub fn sample_theorem3_inputs<R: rand::Rng + ?Sized>(g: &mut R) -> TheoremInputs {
    loop {
        let base = sample_inputs(g);
        let shared = 0.01 + 4.0 * rng::uniform(g);
        let spec = |p: &GroupParams| GroupSpec {
            alpha: p.alpha,
            rho: p.rho,
            sd: p.sd,
            mean: Some(p.mean),
            observed_mean: None,
            unobserved_variance: Some(shared),
        };
        if let Ok(inputs) =
            TheoremInputs::new(base.ratio, spec(&base.marginalised), spec(&base.rest))
        {
            if inputs.marginalised.observed_mean > inputs.observed_mean() {
                return inputs;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.min],
            s => (0..s)
                .map(|k| self.min + (self.max - self.min) * k as f64 / (s - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub rho_g: f64,
    pub rho_ng: f64,
    pub delta_pop: Option<f64>,
    pub delta_group: Option<f64>,
    /// `Δ^pop − Δ^group`.
    pub diff: Option<f64>,
    /// `Δ^group > Δ^pop > 0` via [`theorem3_predicate`]; `None` when its
    /// assumptions fail.
    pub t3: Option<bool>,
    /// `|Δ^pop| < |Δ^group|`.
    pub dotted: Option<bool>,
    pub feasible: bool,
}

/// Evaluates both gaps over a grid of correlations, holding the observed
/// means of `base` fixed. Cells outside the latent-threshold bound are
/// flagged rather than evaluated.
pub fn region_scan(base: &TheoremInputs, rho_g: Axis, rho_ng: Axis) -> Vec<RegionCell> {
    let bound_g = max_attainable_correlation(base.marginalised.alpha).unwrap_or(0.0);
    let bound_ng = max_attainable_correlation(base.rest.alpha).unwrap_or(0.0);
    let cells: Vec<(f64, f64)> = rho_g
        .values()
        .into_iter()
        .flat_map(|a| rho_ng.values().into_iter().map(move |b| (a, b)))
        .collect();
    cells
        .into_par_iter()
        .map(|(a, b)| {
            let empty = RegionCell {
                rho_g: a,
                rho_ng: b,
                delta_pop: None,
                delta_group: None,
                diff: None,
                t3: None,
                dotted: None,
                feasible: false,
            };
            if a.abs() > bound_g || b.abs() > bound_ng {
                return empty;
            }
            let Ok(inputs) = base.with_correlations_fixed_observed(a, b) else {
                return empty;
            };
            let Ok(cf) = reconstruction_closed_form(&inputs) else {
                return empty;
            };
            RegionCell {
                delta_pop: Some(cf.delta_pop),
                delta_group: Some(cf.delta_group),
                diff: Some(cf.delta_pop - cf.delta_group),
                t3: theorem3_predicate(&inputs).ok(),
                dotted: Some(cf.delta_pop.abs() < cf.delta_group.abs()),
                feasible: true,
                ..empty
            }
        })
        .collect()
}

/// Parameters of the worked example used for the region plot: observed
/// means 0.5 and 0, `r = 0.25`, `α = (0.7, 0.8)`, `σ = 0.5` in both groups,
/// shared unobserved variance `σ²`.
pub fn reference_region_inputs() -> TheoremInputs {
    let spec = |alpha: f64, observed: f64| GroupSpec {
        alpha,
        rho: 0.0,
        sd: 0.5,
        mean: None,
        observed_mean: Some(observed),
        unobserved_variance: Some(0.25),
    };
    TheoremInputs::new(0.25, spec(0.7, 0.5), spec(0.8, 0.0)).expect("reference inputs are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub closed_form: f64,
    pub empirical: f64,
}

impl Comparison {
    pub fn absolute_error(&self) -> f64 {
        (self.empirical - self.closed_form).abs()
    }

    pub fn relative_error(&self) -> f64 {
        self.absolute_error() / self.closed_form.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub samples_per_group: usize,
    pub seed: u64,
    pub group_marginalised: Comparison,
    pub population_marginalised: Comparison,
    pub group_rest: Comparison,
    pub population_rest: Comparison,
    pub delta_group: Comparison,
    pub delta_pop: Comparison,
    /// Empirical `Corr(O, X)` per group, `[marginalised, rest]`.
    pub realised_correlation: [f64; 2],
}

impl MonteCarloReport {
    /// The four reconstruction errors, marginalised group first.
    pub fn losses(&self) -> [Comparison; 4] {
        [
            self.group_marginalised,
            self.population_marginalised,
            self.group_rest,
            self.population_rest,
        ]
    }

    pub fn max_relative_loss_error(&self) -> f64 {
        self.losses()
            .iter()
            .map(Comparison::relative_error)
            .fold(0.0, f64::max)
    }
}

/// Builds Gaussian samples for each group (`n` rows each), masks them with
/// the latent-threshold mechanism and measures the reconstruction errors of
/// actual group-mean and population-mean imputation. The population observed
/// mean weights each group's observed values by its share `r` so the equal
/// per-group sample sizes do not distort it.
pub fn monte_carlo_validate(
    inputs: &TheoremInputs,
    n: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    inputs.validate()?;
    if n < 2 {
        return Err(Error::Precondition(
            "Monte Carlo needs at least two samples per group".into(),
        ));
    }
    let (g, ng) = (&inputs.marginalised, &inputs.rest);
    max_attainable_correlation(g.alpha).and_then(|b| {
        if g.rho.abs() <= b {
            Ok(())
        } else {
            latent_correlation(g.alpha, g.rho).map(|_| ())
        }
    })?;
    latent_correlation(ng.alpha, ng.rho)?;

    let mut stream = rng::stream(seed, &[0x3C]);
    let mut values = Vec::with_capacity(2 * n);
    let mut group = Vec::with_capacity(2 * n);
    for (p, flag) in [(ng, false), (g, true)] {
        for _ in 0..n {
            values.push(p.mean + p.sd * rng::standard_normal(&mut stream));
            group.push(flag);
        }
    }
    let cohort = Cohort::new(
        DenseMatrix::from_vec(2 * n, 1, values)?,
        group,
        vec![false; 2 * n],
    )?;
    let mask = apply_calibrated(
        &cohort,
        &CalibratedMechanismSpec {
            observation_rate: [ng.alpha, g.alpha],
            correlation: [ng.rho, g.rho],
            target_covariate: 0,
            seed: rng::derive_seed(seed, &[0x3D]),
        },
    )?;

    let x = cohort.covariates();
    // Per group [rest, marginalised]: observed sum/count, all moments for ρ.
    let mut obs_sum = [0.0f64; 2];
    let mut obs_n = [0usize; 2];
    for i in 0..2 * n {
        let k = cohort.group()[i] as usize;
        if mask.is_observed(i, 0) {
            obs_sum[k] += x.get(i, 0);
            obs_n[k] += 1;
        }
    }
    if obs_n.contains(&0) || obs_n.contains(&n) {
        return Err(Error::Undefined(
            "a group has no observed or no missing values".into(),
        ));
    }
    let group_mean = [obs_sum[0] / obs_n[0] as f64, obs_sum[1] / obs_n[1] as f64];
    let share = [1.0 - inputs.ratio, inputs.ratio];
    let pop_mean = (share[0] * obs_sum[0] + share[1] * obs_sum[1])
        / (share[0] * obs_n[0] as f64 + share[1] * obs_n[1] as f64);

    let mut sq = [[0.0f64; 2]; 2]; // [group][strategy: group, population]
    let mut miss = [0usize; 2];
    for i in 0..2 * n {
        if mask.is_observed(i, 0) {
            continue;
        }
        let k = cohort.group()[i] as usize;
        let v = x.get(i, 0);
        sq[k][0] += (v - group_mean[k]).powi(2);
        sq[k][1] += (v - pop_mean).powi(2);
        miss[k] += 1;
    }
    let emp = |k: usize, s: usize| sq[k][s] / miss[k] as f64;

    let realised = |k: usize| {
        let rows: Vec<usize> = (0..2 * n)
            .filter(|&i| cohort.group()[i] as usize == k)
            .collect();
        let m = rows.len() as f64;
        let (mut sx, mut so, mut sxx, mut soo, mut sxo) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &i in &rows {
            let xv = x.get(i, 0);
            let o = mask.is_observed(i, 0) as u8 as f64;
            sx += xv;
            so += o;
            sxx += xv * xv;
            soo += o * o;
            sxo += xv * o;
        }
        let cov = sxo / m - sx / m * so / m;
        cov / ((sxx / m - (sx / m).powi(2)) * (soo / m - (so / m).powi(2))).sqrt()
    };

    let cf = reconstruction_closed_form(inputs)?;
    let cmp = |c: f64, e: f64| Comparison {
        closed_form: c,
        empirical: e,
    };
    Ok(MonteCarloReport {
        samples_per_group: n,
        seed,
        group_marginalised: cmp(cf.marginalised.group, emp(1, 0)),
        population_marginalised: cmp(cf.marginalised.population, emp(1, 1)),
        group_rest: cmp(cf.rest.group, emp(0, 0)),
        population_rest: cmp(cf.rest.population, emp(0, 1)),
        delta_group: cmp(cf.delta_group, emp(1, 0) - emp(0, 0)),
        delta_pop: cmp(cf.delta_pop, emp(1, 1) - emp(0, 1)),
        realised_correlation: [realised(1), realised(0)],
    })
}
