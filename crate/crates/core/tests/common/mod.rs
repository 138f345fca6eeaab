//! Property checks shared by the property suite and the acceptance run.

#![allow(dead_code)]

use fairimpute::data::{Cohort, MaskedCohort, ObservationMask};
use fairimpute::impute::{fit_transform, ImputerSpec, Strategy};
use fairimpute::metrics::{auc_score, threshold_metrics};
use fairimpute::numeric::{rng, DenseMatrix};
use fairimpute::predict::{penalised_gradient, penalised_loss};
use fairimpute::theory::{
    constant_imputation_error, population_bias, population_bias_expanded, sample_inputs,
};
use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, prop_assume};
use proptest::strategy::Strategy as _;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestError, TestRng, TestRunner};

pub type Check = std::result::Result<(), TestCaseError>;

pub const STRATEGIES: [Strategy; 4] = [
    Strategy::PopulationMean,
    Strategy::GroupMean,
    Strategy::Mice,
    Strategy::GroupMice,
];

#[derive(Debug, Clone)]
pub struct RawCohort {
    pub n: usize,
    pub d: usize,
    pub values: Vec<f64>,
    pub observed: Vec<bool>,
    pub group: Vec<bool>,
    pub outcome: Vec<bool>,
}

impl RawCohort {
    pub fn masked(&self) -> MaskedCohort {
        let cohort = Cohort::new(
            DenseMatrix::from_vec(self.n, self.d, self.values.clone()).unwrap(),
            self.group.clone(),
            self.outcome.clone(),
        )
        .unwrap();
        MaskedCohort::new(
            cohort,
            ObservationMask::from_vec(self.n, self.d, self.observed.clone()).unwrap(),
        )
        .unwrap()
    }
}

/// Small cohorts whose first two rows are fully observed, so no column is
/// entirely missing.
pub fn raw_cohort() -> impl proptest::strategy::Strategy<Value = RawCohort> {
    (6usize..30, 1usize..4).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(-3.0f64..3.0, n * d),
            prop::collection::vec(prop::bool::weighted(0.7), n * d),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(values, mut observed, group, outcome)| {
                observed[..2 * d].iter_mut().for_each(|o| *o = true);
                RawCohort {
                    n,
                    d,
                    values,
                    observed,
                    group,
                    outcome,
                }
            })
    })
}

/// Every strategy leaves observed entries bit-identical and marks exactly
/// the missing ones in the indicators.
pub fn observed_values_preserved(
    raw: &RawCohort,
    strategy: usize,
    indicators: bool,
    seed: u64,
) -> Check {
    let data = raw.masked();
    let mut spec = ImputerSpec::new(STRATEGIES[strategy])
        .with_indicators(indicators)
        .with_seed(seed);
    spec.mice_iterations = 3;
    spec.mice_draws = 2;
    let (_, result) =
        fit_transform(&data, &spec).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for completed in &result.completed {
        for i in 0..raw.n {
            for j in 0..raw.d {
                let k = i * raw.d + j;
                if raw.observed[k] {
                    prop_assert_eq!(completed.get(i, j).to_bits(), raw.values[k].to_bits());
                } else {
                    prop_assert!(completed.get(i, j).is_finite());
                }
                if let Some(ind) = &result.indicators {
                    prop_assert_eq!(ind.get(i, j), if raw.observed[k] { 0.0 } else { 1.0 });
                }
            }
        }
    }
    prop_assert_eq!(result.indicators.is_some(), indicators);
    Ok(())
}

pub fn auc_invariant_under_increasing_transform(
    scores: &[f64],
    outcomes: &[bool],
    shift: f64,
    scale: f64,
) -> Check {
    prop_assume!(outcomes.iter().any(|&v| v) && outcomes.iter().any(|&v| !v));
    let t: Vec<f64> = scores.iter().map(|v| (scale * v).exp() + shift).collect();
    let cube: Vec<f64> = scores.iter().map(|v| v.powi(3)).collect();
    prop_assert_eq!(auc_score(scores, outcomes), auc_score(&t, outcomes));
    prop_assert_eq!(auc_score(scores, outcomes), auc_score(&cube, outcomes));
    Ok(())
}

pub fn fnr_monotone_in_capacity(
    scores: &[f64],
    outcomes: &[bool],
    groups: &[bool],
    c1: f64,
    c2: f64,
) -> Check {
    let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
    let a = threshold_metrics(scores, outcomes, groups, lo).unwrap();
    let b = threshold_metrics(scores, outcomes, groups, hi).unwrap();
    for k in 0..3 {
        if let (Some(x), Some(z)) = (a.fnr.fields()[k], b.fnr.fields()[k]) {
            prop_assert!(
                z <= x,
                "fnr rose from {} to {} between capacities {} and {}",
                x,
                z,
                lo,
                hi
            );
        }
    }
    Ok(())
}

/// Central differences with step `1e-5` agree with the analytic gradient to
/// `1e-6` relative.
pub fn gradient_matches_finite_differences(
    rows: &[(f64, f64, f64, bool)],
    params: [f64; 4],
    penalty: f64,
) -> Check {
    let x = DenseMatrix::from_vec(
        rows.len(),
        3,
        rows.iter().flat_map(|r| [r.0, r.1, r.2]).collect(),
    )
    .unwrap();
    let y: Vec<bool> = rows.iter().map(|r| r.3).collect();
    let g = penalised_gradient(&x, &y, params[0], &params[1..], penalty);
    let h = 1e-5;
    let mut p = params;
    for k in 0..4 {
        let orig = p[k];
        p[k] = orig + h;
        let up = penalised_loss(&x, &y, p[0], &p[1..], penalty);
        p[k] = orig - h;
        let down = penalised_loss(&x, &y, p[0], &p[1..], penalty);
        p[k] = orig;
        let fd = (up - down) / (2.0 * h);
        prop_assert!(
            (fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0),
            "param {}: fd {} vs {}",
            k,
            fd,
            g[k]
        );
    }
    Ok(())
}

/// Mean squared error of a constant fill over the missing entries equals
/// squared bias plus unobserved variance (population moments).
pub fn constant_fill_decomposes(values: &[f64], observed: &[bool], c: f64) -> Check {
    let missing: Vec<f64> = values
        .iter()
        .zip(observed)
        .filter(|(_, o)| !**o)
        .map(|(v, _)| *v)
        .collect();
    prop_assume!(!missing.is_empty());
    let n = missing.len() as f64;
    let mse = missing.iter().map(|v| (v - c).powi(2)).sum::<f64>() / n;
    let mean = missing.iter().sum::<f64>() / n;
    let var = missing.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let closed = constant_imputation_error(mean, var, c);
    prop_assert!(
        (mse - closed).abs() <= 1e-9 * mse.max(1.0),
        "{} vs {}",
        mse,
        closed
    );
    Ok(())
}

/// Population bias through the group bias agrees with the expanded form.
pub fn population_bias_forms_agree(seed: u64) -> Check {
    let inputs = sample_inputs(&mut rng::stream(seed, &[]));
    let a = population_bias(&inputs).unwrap();
    let b = population_bias_expanded(&inputs).unwrap();
    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {}", a, b);
    Ok(())
}

/// Runs one property with a fixed-seed runner.
pub fn run_property<S, F>(cases: u32, strategy: S, test: F) -> std::result::Result<(), String>
where
    S: proptest::strategy::Strategy,
    F: Fn(S::Value) -> Check,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| match e {
        TestError::Abort(why) => format!("aborted: {why}"),
        TestError::Fail(why, value) => format!("{why} for {value:?}"),
    })
}
