//! Observation masks: the three group-specific clinical scenarios and a
//! latent-threshold mechanism calibrated to a target observation rate and
//! observation/covariate correlation per group.

use serde::{Deserialize, Serialize};

use crate::data::{Cohort, ObservationMask};
use crate::error::{Error, Result};
use crate::numeric::{normal_cdf_inv, normal_pdf, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Limited access to care: masking depends on group membership only.
    S1,
    /// (Mis)-informed collection: masking depends on another covariate.
    S2,
    /// Confirmation bias: masking depends on the masked value itself.
    S3,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub target_covariate: usize,
    /// Only read by S2.
    #[serde(default)]
    pub trigger_covariate: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_mask_probability")]
    pub mask_probability: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_threshold() -> f64 {
    0.5
}

fn default_mask_probability() -> f64 {
    0.5
}

impl ScenarioSpec {
    /// Reference setting: 50% masking above a 0.5 threshold. The masked
    /// covariate is the one along which majority positives are shifted
    /// (column 0 in [`crate::synthgen::PopulationSpec::reference_base`]); the S2
    /// trigger is the other one.
    pub fn reference(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            target_covariate: 0,
            trigger_covariate: 1,
            threshold: 0.5,
            mask_probability: 0.5,
            seed,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mask_probability) {
            return Err(Error::Config(format!(
                "mask probability {} outside [0, 1]",
                self.mask_probability
            )));
        }
        if self.target_covariate >= d
            || (self.scenario == Scenario::S2 && self.trigger_covariate >= d)
        {
            return Err(Error::Config(format!(
                "covariate index out of range for d = {d}"
            )));
        }
        if !self.threshold.is_finite() {
            return Err(Error::NonFinite("scenario threshold"));
        }
        Ok(())
    }
}

/// Masks the target covariate per scenario; every other entry stays observed.
///
/// One uniform draw is consumed per row whatever the scenario, so a given
/// seed produces the same random stream across scenarios.
pub fn apply_scenario(cohort: &Cohort, spec: &ScenarioSpec) -> Result<ObservationMask> {
    spec.validate(cohort.n_cols())?;
    let x = cohort.covariates();
    let mut mask = ObservationMask::fully_observed(cohort.n_rows(), cohort.n_cols());
    let mut rng = rng::stream(spec.seed, &[0x3A5C, spec.scenario as u64]);
    for i in 0..cohort.n_rows() {
        let u = rng::uniform(&mut rng);
        let eligible = match spec.scenario {
            Scenario::S1 => cohort.group()[i],
            Scenario::S2 => x.get(i, spec.trigger_covariate) > spec.threshold,
            Scenario::S3 => x.get(i, spec.target_covariate) > spec.threshold,
        };
        if eligible && u < spec.mask_probability {
            mask.set_observed(i, spec.target_covariate, false);
        }
    }
    Ok(mask)
}

/// Largest `|ρ|` a latent Gaussian threshold can realise at observation rate
/// `alpha`: `φ(Φ⁻¹(α)) / sqrt(α(1 − α))`.
pub fn max_attainable_correlation(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Singular(format!(
            "observation rate {alpha} must lie in (0, 1)"
        )));
    }
    let z = normal_cdf_inv(alpha)?;
    Ok(normal_pdf(z) / (alpha * (1.0 - alpha)).sqrt())
}

/// Correlation between the latent variable and the standardised covariate
/// that yields `Corr(O, X) = rho`: `r = −ρ·sqrt(α(1 − α)) / φ(Φ⁻¹(α))`.
pub fn latent_correlation(alpha: f64, rho: f64) -> Result<f64> {
    let bound = max_attainable_correlation(alpha)?;
    if rho.abs() > bound {
        return Err(Error::Precondition(format!(
            "correlation {rho} is not attainable at observation rate {alpha}; |rho| must be <= {bound:.6}"
        )));
    }
    let z = normal_cdf_inv(alpha)?;
    Ok((-rho * (alpha * (1.0 - alpha)).sqrt() / normal_pdf(z)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedMechanismSpec {
    /// Observation rate, indexed by group (`[rest, marginalised]`).
    pub observation_rate: [f64; 2],
    /// Target `Corr(O, X | G)`, indexed like `observation_rate`.
    pub correlation: [f64; 2],
    pub target_covariate: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Latent-threshold masking: within each group, `Z = r·x̂ + sqrt(1 − r²)·ε`
/// with `x̂` the group-standardised covariate, and `O = 1[Z ≤ Φ⁻¹(α)]`.
///
/// The realised correlation is exact in expectation for Gaussian covariates
/// and approximate otherwise.
pub fn apply_calibrated(
    cohort: &Cohort,
    spec: &CalibratedMechanismSpec,
) -> Result<ObservationMask> {
    let col = spec.target_covariate;
    if col >= cohort.n_cols() {
        return Err(Error::Config(format!("covariate index {col} out of range")));
    }
    let mut latent = [0.0; 2];
    let mut cut = [0.0; 2];
    for g in 0..2 {
        latent[g] = latent_correlation(spec.observation_rate[g], spec.correlation[g])?;
        cut[g] = normal_cdf_inv(spec.observation_rate[g])?;
    }

    let x = cohort.covariates();
    let mut moments = [(0.0f64, 0.0f64, 0usize); 2];
    for i in 0..cohort.n_rows() {
        let g = cohort.group()[i] as usize;
        let v = x.get(i, col);
        moments[g].0 += v;
        moments[g].1 += v * v;
        moments[g].2 += 1;
    }
    let stats = moments.map(|(s, ss, n)| {
        if n == 0 {
            return (0.0, 1.0);
        }
        let mean = s / n as f64;
        let var = (ss / n as f64 - mean * mean).max(0.0);
        (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
    });

    let mut mask = ObservationMask::fully_observed(cohort.n_rows(), cohort.n_cols());
    let mut rng = rng::stream(spec.seed, &[0xCA11B]);
    for i in 0..cohort.n_rows() {
        let g = cohort.group()[i] as usize;
        let eps = rng::standard_normal(&mut rng);
        let standardised = (x.get(i, col) - stats[g].0) / stats[g].1;
        let r = latent[g];
        let z = r * standardised + (1.0 - r * r).sqrt() * eps;
        if z > cut[g] {
            mask.set_observed(i, col, false);
        }
    }
    Ok(mask)
}

/// Per-group summary of one covariate's missingness, computed with
/// population (`1/n`) moments so that the reconstruction identities hold
/// exactly on the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDescriptor {
    pub count: usize,
    /// Observation rate `α_g`.
    pub observation_rate: f64,
    /// `Corr(O, X | G)`; `None` when the group is fully observed or fully missing.
    pub correlation: Option<f64>,
    /// Mean of all (true) values in the group.
    pub mean: f64,
    /// Observed group mean `μ_g^O`; `None` when nothing is observed.
    pub observed_mean: Option<f64>,
    /// `σ_{X|G}`.
    pub sd: f64,
    /// Mean of the unobserved values.
    pub unobserved_mean: Option<f64>,
    /// `σ_{X|¬O,G}`.
    pub unobserved_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessDescriptor {
    /// Indexed by group (`[rest, marginalised]`).
    pub groups: [GroupDescriptor; 2],
    /// Observed population mean `μ^O`.
    pub observed_mean: Option<f64>,
    /// Marginalised share of the rows, `r_g`.
    pub marginalised_ratio: f64,
}

/// Describes the missingness of one covariate against the ground truth.
pub fn describe(
    cohort: &Cohort,
    mask: &ObservationMask,
    covariate: usize,
) -> Result<MissingnessDescriptor> {
    if mask.rows() != cohort.n_rows() || mask.cols() != cohort.n_cols() {
        return Err(Error::Schema("mask does not match cohort".into()));
    }
    if covariate >= cohort.n_cols() {
        return Err(Error::Config(format!(
            "covariate index {covariate} out of range"
        )));
    }
    let x = cohort.covariates();
    let mut observed_sum = 0.0;
    let mut observed_n = 0usize;
    let groups = [false, true].map(|marg| {
        let rows: Vec<usize> = (0..cohort.n_rows())
            .filter(|&i| cohort.group()[i] == marg)
            .collect();
        let n = rows.len();
        let vals: Vec<f64> = rows.iter().map(|&i| x.get(i, covariate)).collect();
        let obs: Vec<bool> = rows
            .iter()
            .map(|&i| mask.is_observed(i, covariate))
            .collect();
        let (obs_vals, unobs_vals): (Vec<f64>, Vec<f64>) = {
            let mut o = Vec::new();
            let mut u = Vec::new();
            for (v, &ob) in vals.iter().zip(&obs) {
                if ob {
                    o.push(*v)
                } else {
                    u.push(*v)
                }
            }
            (o, u)
        };
        observed_sum += obs_vals.iter().sum::<f64>();
        observed_n += obs_vals.len();

        let mean_of = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let sd_of = |v: &[f64]| {
            mean_of(v)
                .map(|m| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt())
        };
        let mean = mean_of(&vals).unwrap_or(f64::NAN);
        let sd = sd_of(&vals).unwrap_or(f64::NAN);
        let alpha = if n == 0 {
            f64::NAN
        } else {
            obs_vals.len() as f64 / n as f64
        };
        let correlation = if obs_vals.is_empty() || unobs_vals.is_empty() || !(sd > 0.0) {
            None
        } else {
            let cov = vals
                .iter()
                .zip(&obs)
                .map(|(v, &o)| ((o as u8 as f64) - alpha) * (v - mean))
                .sum::<f64>()
                / n as f64;
            Some(cov / ((alpha * (1.0 - alpha)).sqrt() * sd))
        };
        GroupDescriptor {
            count: n,
            observation_rate: alpha,
            correlation,
            mean,
            observed_mean: mean_of(&obs_vals),
            sd,
            unobserved_mean: mean_of(&unobs_vals),
            unobserved_sd: sd_of(&unobs_vals),
        }
    });
    Ok(MissingnessDescriptor {
        observed_mean: (observed_n > 0).then(|| observed_sum / observed_n as f64),
        marginalised_ratio: groups[1].count as f64 / cohort.n_rows() as f64,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::DenseMatrix;
    use crate::synthgen::{generate, PopulationSpec};

    fn gaussian_cohort(n_per_group: usize, seed: u64) -> Cohort {
        let mut r = rng::stream(seed, &[]);
        let n = 2 * n_per_group;
        let data: Vec<f64> = (0..n)
            .map(|i| if i < n_per_group { 0.0 } else { 2.0 } + rng::standard_normal(&mut r))
            .collect();
        Cohort::new(
            DenseMatrix::from_vec(n, 1, data).unwrap(),
            (0..n).map(|i| i >= n_per_group).collect(),
            vec![false; n],
        )
        .unwrap()
    }

    #[test]
    fn s1_masks_only_marginalised_rows() {
        let c = generate(&PopulationSpec::reference_base(1)).unwrap();
        let m = apply_scenario(&c, &ScenarioSpec::reference(Scenario::S1, 2)).unwrap();
        let d = describe(&c, &m, 0).unwrap();
        assert_eq!(d.groups[0].observation_rate, 1.0);
        assert!(d.groups[0].correlation.is_none());
        let tol = 3.0 * 0.5 / (1000f64).sqrt();
        assert!((d.groups[1].observation_rate - 0.5).abs() < tol);
        // MCAR within the marginalised group.
        assert!(d.groups[1].correlation.unwrap().abs() < 3.0 / (1000f64).sqrt());
        // Other covariates untouched.
        assert_eq!(m.observed_count(1), c.n_rows());
    }

    #[test]
    fn s3_with_certain_masking_is_deterministic() {
        let c = generate(&PopulationSpec {
            n_majority: 2000,
            n_marginalised: 200,
            ..PopulationSpec::reference_base(4)
        })
        .unwrap();
        let spec = ScenarioSpec {
            mask_probability: 1.0,
            ..ScenarioSpec::reference(Scenario::S3, 1)
        };
        let m = apply_scenario(&c, &spec).unwrap();
        for i in 0..c.n_rows() {
            assert_eq!(m.is_observed(i, 0), c.covariates().get(i, 0) <= 0.5);
            assert!(m.is_observed(i, 1));
        }
    }

    #[test]
    fn s2_depends_only_on_trigger() {
        let c = generate(&PopulationSpec {
            n_majority: 5000,
            n_marginalised: 500,
            ..PopulationSpec::reference_base(8)
        })
        .unwrap();
        let spec = ScenarioSpec {
            mask_probability: 1.0,
            ..ScenarioSpec::reference(Scenario::S2, 3)
        };
        let m = apply_scenario(&c, &spec).unwrap();
        for i in 0..c.n_rows() {
            assert_eq!(m.is_observed(i, 0), c.covariates().get(i, 1) <= 0.5);
        }
    }

    #[test]
    fn scenario_spec_validation() {
        let c = gaussian_cohort(10, 0);
        let bad = ScenarioSpec {
            mask_probability: 1.5,
            ..ScenarioSpec::reference(Scenario::S1, 0)
        };
        assert!(apply_scenario(&c, &bad).is_err());
        let bad = ScenarioSpec {
            target_covariate: 3,
            ..ScenarioSpec::reference(Scenario::S3, 0)
        };
        assert!(apply_scenario(&c, &bad).is_err());
    }

    #[test]
    fn attainable_bound_at_seventy_percent() {
        let b = max_attainable_correlation(0.7).unwrap();
        assert!((b - 0.7587).abs() < 1e-3, "{b}");
        let err = latent_correlation(0.7, 1.0).unwrap_err();
        assert!(err.to_string().contains("0.758"), "{err}");
        assert!(max_attainable_correlation(1.0).is_err());
    }

    #[test]
    fn calibrated_independence_case() {
        let n = 100_000;
        let c = gaussian_cohort(n, 3);
        let spec = CalibratedMechanismSpec {
            observation_rate: [0.7, 0.7],
            correlation: [0.0, 0.0],
            target_covariate: 0,
            seed: 5,
        };
        assert_eq!(latent_correlation(0.7, 0.0).unwrap(), 0.0);
        let d = describe(&c, &apply_calibrated(&c, &spec).unwrap(), 0).unwrap();
        for g in &d.groups {
            assert!(g.correlation.unwrap().abs() < 3.0 / (n as f64).sqrt());
            assert!((g.observation_rate - 0.7).abs() < 3.0 * (0.21 / n as f64).sqrt());
        }
    }

    #[test]
    fn calibrated_mask_recovers_targets() {
        let n = 1_000_000;
        let c = gaussian_cohort(n, 7);
        let spec = CalibratedMechanismSpec {
            observation_rate: [0.7, 0.4],
            correlation: [0.3, -0.5],
            target_covariate: 0,
            seed: 9,
        };
        let d = describe(&c, &apply_calibrated(&c, &spec).unwrap(), 0).unwrap();
        for (g, desc) in d.groups.iter().enumerate() {
            let a = spec.observation_rate[g];
            assert!((desc.observation_rate - a).abs() < 3.0 * (a * (1.0 - a) / n as f64).sqrt());
            assert!((desc.correlation.unwrap() - spec.correlation[g]).abs() < 0.005);
        }
    }

    #[test]
    fn describe_fully_observed_column() {
        let c = gaussian_cohort(50, 1);
        let d = describe(&c, &ObservationMask::fully_observed(100, 1), 0).unwrap();
        for g in &d.groups {
            assert_eq!(g.observation_rate, 1.0);
            assert!(g.correlation.is_none());
            assert!((g.observed_mean.unwrap() - g.mean).abs() < 1e-12);
            assert!(g.unobserved_sd.is_none());
        }
    }
}
