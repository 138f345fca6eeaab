//! Seeded synthetic cohorts: a shared negative cluster and one positive
//! cluster per group, all isotropic Gaussians.

use serde::{Deserialize, Serialize};

use crate::data::Cohort;
use crate::error::{Error, Result};
use crate::numeric::{rng, DenseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub mean: Vec<f64>,
    /// Per-coordinate variance of the isotropic Gaussian.
    pub variance: f64,
}

impl ClusterSpec {
    pub fn new(mean: Vec<f64>, variance: f64) -> Self {
        Self { mean, variance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub n_majority: usize,
    pub n_marginalised: usize,
    pub prevalence_majority: f64,
    pub prevalence_marginalised: f64,
    pub negative_cluster: ClusterSpec,
    pub positive_majority_cluster: ClusterSpec,
    pub positive_marginalised_cluster: ClusterSpec,
    #[serde(default)]
    pub correlate_x2_with_x1: bool,
    #[serde(default)]
    pub seed: u64,
}

/// The clusters' scale in the reference simulations is 0.25 as a standard
/// deviation, i.e. variance 0.0625 per coordinate.
pub const REFERENCE_CLUSTER_VARIANCE: f64 = 0.0625;

impl PopulationSpec {
    /// 100,000 majority and 1,000 marginalised rows, 2/3 prevalence in both,
    /// negatives at (0, 0), majority positives at (1, 0), marginalised
    /// positives at (0, 1).
    pub fn reference_base(seed: u64) -> Self {
        Self {
            n_majority: 100_000,
            n_marginalised: 1_000,
            prevalence_majority: 2.0 / 3.0,
            prevalence_marginalised: 2.0 / 3.0,
            negative_cluster: ClusterSpec::new(vec![0.0, 0.0], REFERENCE_CLUSTER_VARIANCE),
            positive_majority_cluster: ClusterSpec::new(vec![1.0, 0.0], REFERENCE_CLUSTER_VARIANCE),
            positive_marginalised_cluster: ClusterSpec::new(
                vec![0.0, 1.0],
                REFERENCE_CLUSTER_VARIANCE,
            ),
            correlate_x2_with_x1: false,
            seed,
        }
    }

    /// Same manifestation in both groups (positives at (1, 1)) but prevalence
    /// 10% in the majority and 50% in the marginalised group.
    pub fn reference_different_prevalence(seed: u64) -> Self {
        Self {
            prevalence_majority: 0.1,
            prevalence_marginalised: 0.5,
            positive_majority_cluster: ClusterSpec::new(vec![1.0, 1.0], REFERENCE_CLUSTER_VARIANCE),
            positive_marginalised_cluster: ClusterSpec::new(
                vec![1.0, 1.0],
                REFERENCE_CLUSTER_VARIANCE,
            ),
            ..Self::reference_base(seed)
        }
    }

    /// Base population with X1 added to X2 after sampling.
    pub fn reference_correlated(seed: u64) -> Self {
        Self {
            correlate_x2_with_x1: true,
            ..Self::reference_base(seed)
        }
    }

    pub fn dimension(&self) -> usize {
        self.negative_cluster.mean.len()
    }

    /// Share of the marginalised group in the population.
    pub fn marginalised_ratio(&self) -> f64 {
        self.n_marginalised as f64 / (self.n_majority + self.n_marginalised) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_majority == 0 || self.n_marginalised == 0 {
            return Err(Error::Config("both groups need at least one row".into()));
        }
        for p in [self.prevalence_majority, self.prevalence_marginalised] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("prevalence {p} outside [0, 1]")));
            }
        }
        let d = self.dimension();
        if d == 0 {
            return Err(Error::Config(
                "clusters need at least one coordinate".into(),
            ));
        }
        for c in [
            &self.negative_cluster,
            &self.positive_majority_cluster,
            &self.positive_marginalised_cluster,
        ] {
            if c.mean.len() != d {
                return Err(Error::Config("cluster means differ in dimension".into()));
            }
            if !(c.variance > 0.0) || !c.variance.is_finite() {
                return Err(Error::Config(format!(
                    "cluster variance must be > 0, got {}",
                    c.variance
                )));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::NonFinite("cluster mean"));
            }
        }
        if self.correlate_x2_with_x1 && d < 2 {
            return Err(Error::Config(
                "correlated variant needs two covariates".into(),
            ));
        }
        Ok(())
    }
}

/// Draws a cohort: majority rows first, then marginalised rows. Outcomes are
/// per-row Bernoulli draws at the group's prevalence.
pub fn generate(spec: &PopulationSpec) -> Result<Cohort> {
    spec.validate()?;
    let d = spec.dimension();
    let n = spec.n_majority + spec.n_marginalised;
    let mut rng = rng::stream(spec.seed, &[0xC0_4027]);

    let mut data = Vec::with_capacity(n * d);
    let mut group = Vec::with_capacity(n);
    let mut outcome = Vec::with_capacity(n);
    for i in 0..n {
        let marginalised = i >= spec.n_majority;
        let prevalence = if marginalised {
            spec.prevalence_marginalised
        } else {
            spec.prevalence_majority
        };
        let positive = rng::uniform(&mut rng) < prevalence;
        let cluster = match (positive, marginalised) {
            (false, _) => &spec.negative_cluster,
            (true, false) => &spec.positive_majority_cluster,
            (true, true) => &spec.positive_marginalised_cluster,
        };
        let sd = cluster.variance.sqrt();
        let start = data.len();
        for &m in &cluster.mean {
            data.push(m + sd * rng::standard_normal(&mut rng));
        }
        if spec.correlate_x2_with_x1 {
            data[start + 1] += data[start];
        }
        group.push(marginalised);
        outcome.push(positive);
    }
    Cohort::new(DenseMatrix::from_vec(n, d, data)?, group, outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster_moments(c: &Cohort, pick: impl Fn(usize) -> bool, col: usize) -> (f64, f64, usize) {
        let vals: Vec<f64> = (0..c.n_rows())
            .filter(|&i| pick(i))
            .map(|i| c.covariates().get(i, col))
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var, vals.len())
    }

    #[test]
    fn base_population_cluster_means() {
        let spec = PopulationSpec::reference_base(5);
        let c = generate(&spec).unwrap();
        assert_eq!(c.n_rows(), 101_000);
        assert_eq!(c.group().iter().filter(|g| **g).count(), 1_000);
        let g = c.group();
        let y = c.outcome();
        let clusters: [(Box<dyn Fn(usize) -> bool>, &ClusterSpec); 3] = [
            (Box::new(|i| !y[i]), &spec.negative_cluster),
            (Box::new(|i| y[i] && !g[i]), &spec.positive_majority_cluster),
            (
                Box::new(|i| y[i] && g[i]),
                &spec.positive_marginalised_cluster,
            ),
        ];
        for (pick, cl) in &clusters {
            for col in 0..2 {
                let (mean, var, n) = cluster_moments(&c, pick, col);
                let sd = cl.variance.sqrt();
                let tol = 3.0 * sd / (n as f64).sqrt();
                assert!((mean - cl.mean[col]).abs() < tol, "mean {mean} (n = {n})");
                if n > 10_000 {
                    assert!((mean - cl.mean[col]).abs() < 0.01);
                }
                // Sample variance: sd of the estimate ~ var*sqrt(2/n).
                assert!((var - cl.variance).abs() < 4.0 * cl.variance * (2.0 / n as f64).sqrt());
            }
        }
        let prev = |marg: bool| {
            let rows: Vec<usize> = (0..c.n_rows()).filter(|&i| g[i] == marg).collect();
            rows.iter().filter(|&&i| y[i]).count() as f64 / rows.len() as f64
        };
        assert!((prev(false) - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn different_prevalence_variant() {
        let c = generate(&PopulationSpec::reference_different_prevalence(1)).unwrap();
        let (g, y) = (c.group(), c.outcome());
        let rate = |marg: bool| {
            let rows: Vec<usize> = (0..c.n_rows()).filter(|&i| g[i] == marg).collect();
            rows.iter().filter(|&&i| y[i]).count() as f64 / rows.len() as f64
        };
        assert!((rate(false) - 0.1).abs() < 0.01);
        // 1,000 rows: 3 sigma of a Bernoulli(0.5) rate is ~0.047.
        assert!((rate(true) - 0.5).abs() < 0.05);
    }

    #[test]
    fn forced_positive_singletons() {
        let spec = PopulationSpec {
            n_majority: 1,
            n_marginalised: 1,
            prevalence_majority: 1.0,
            prevalence_marginalised: 1.0,
            positive_majority_cluster: ClusterSpec::new(vec![100.0, 0.0], 1e-6),
            positive_marginalised_cluster: ClusterSpec::new(vec![0.0, -100.0], 1e-6),
            ..PopulationSpec::reference_base(3)
        };
        let c = generate(&spec).unwrap();
        assert_eq!(c.outcome(), &[true, true]);
        assert_eq!(c.group(), &[false, true]);
        assert!((c.covariates().get(0, 0) - 100.0).abs() < 0.01);
        assert!((c.covariates().get(1, 1) + 100.0).abs() < 0.01);
    }

    #[test]
    fn correlated_variant_adds_x1_to_x2() {
        let a = generate(&PopulationSpec::reference_base(9)).unwrap();
        let b = generate(&PopulationSpec::reference_correlated(9)).unwrap();
        for i in (0..a.n_rows()).step_by(997) {
            let (x1, x2) = (a.covariates().get(i, 0), a.covariates().get(i, 1));
            assert_eq!(b.covariates().get(i, 0), x1);
            assert_eq!(b.covariates().get(i, 1), x2 + x1);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = PopulationSpec {
            n_majority: 500,
            n_marginalised: 50,
            ..PopulationSpec::reference_base(77)
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = PopulationSpec {
            seed: 78,
            ..spec.clone()
        };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = PopulationSpec::reference_base(0);
        s.negative_cluster.variance = 0.0;
        assert!(generate(&s).is_err());
        let s = PopulationSpec {
            n_marginalised: 0,
            ..PopulationSpec::reference_base(0)
        };
        assert!(generate(&s).is_err());
    }
}
