use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, ValidationConfig};
use crate::harness::report::rows_to_csv;
use crate::numeric::rng;
use crate::theory::{
    monte_carlo_validate, reconstruction_closed_form, sample_inputs, sample_theorem3_inputs,
    theorem2_predicate, theorem3_predicate, TheoremInputs,
};

/// Minimum relative separation `|L^group − L^pop| / max(L^group, L^pop)` of
/// the marginalised group's two losses for an input to serve as an empirical
/// sign check, so Monte Carlo noise cannot flip the comparison.
pub const SIGN_MARGIN: f64 = 0.05;

/// Empirical sign checks drawn on each side of the boundary.
pub const SIGN_CHECKS_PER_SIDE: usize = 10;

const MAX_DRAWS: usize = 1_000_000;

/// One line of `validation.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub check: String,
    pub case: usize,
    pub quantity: String,
    pub closed_form: Option<f64>,
    pub empirical: Option<f64>,
    pub relative_error: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub monte_carlo_cases: usize,
    pub monte_carlo_failures: usize,
    pub max_relative_error: f64,
    pub relative_tolerance: f64,
    pub predicate_inputs: usize,
    pub theorem2_disagreements: usize,
    pub theorem3_disagreements: usize,
    pub theorem3_positives: usize,
    pub sign_checks: usize,
    pub sign_failures: usize,
}

impl ValidationSummary {
    pub fn passed(&self) -> bool {
        self.monte_carlo_failures == 0
            && self.theorem2_disagreements == 0
            && self.theorem3_disagreements == 0
            && self.sign_failures == 0
    }
}

#[derive(Debug, Clone)]
pub struct ValidationOutput {
    pub rows: Vec<ValidationRow>,
    pub summary: ValidationSummary,
}

impl ValidationOutput {
    /// Writes `validation.csv` and `validation_summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("validation.csv"), rows_to_csv(&self.rows)?)?;
        std::fs::write(
            dir.join("validation_summary.json"),
            serde_json::to_string_pretty(&self.summary)?,
        )?;
        Ok(())
    }
}

const LOSS_NAMES: [&str; 4] = [
    "group_marginalised",
    "population_marginalised",
    "group_rest",
    "population_rest",
];

/// Monte Carlo check of the four closed-form losses for each input.
pub fn monte_carlo_rows(
    inputs: &[TheoremInputs],
    samples: usize,
    tolerance: f64,
    seed: u64,
) -> Result<Vec<Vec<ValidationRow>>> {
    inputs
        .par_iter()
        .enumerate()
        .map(|(k, i)| {
            let report = monte_carlo_validate(i, samples, rng::derive_seed(seed, &[k as u64]))?;
            Ok(report
                .losses()
                .iter()
                .zip(LOSS_NAMES)
                .map(|(c, name)| ValidationRow {
                    check: "monte_carlo".into(),
                    case: k,
                    quantity: name.into(),
                    closed_form: Some(c.closed_form),
                    empirical: Some(c.empirical),
                    relative_error: Some(c.relative_error()),
                    passed: c.relative_error() <= tolerance,
                })
                .collect())
        })
        .collect()
}

/// Counts predicate disagreements with the direct closed-form comparisons:
/// `(theorem2 disagreements, theorem3 disagreements, theorem3 positives)`.
pub fn predicate_disagreements(count: usize, seed: u64) -> Result<(usize, usize, usize)> {
    let mut g = rng::stream(seed, &[2]);
    let mut t2 = 0;
    for _ in 0..count {
        let i = sample_inputs(&mut g);
        let cf = reconstruction_closed_form(&i)?;
        t2 += (theorem2_predicate(&i)? != (cf.marginalised.group > cf.marginalised.population))
            as usize;
    }
    let mut g = rng::stream(seed, &[3]);
    let (mut t3, mut positives) = (0, 0);
    for _ in 0..count {
        let i = sample_theorem3_inputs(&mut g);
        let cf = reconstruction_closed_form(&i)?;
        let direct = cf.delta_group > cf.delta_pop && cf.delta_pop > 0.0;
        t3 += (theorem3_predicate(&i)? != direct) as usize;
        positives += direct as usize;
    }
    Ok((t2, t3, positives))
}

/// Draws `per_side` inputs where [`theorem2_predicate`] holds and
/// `per_side` where it fails, each with the losses separated by
/// [`SIGN_MARGIN`].
pub fn theorem2_boundary_inputs(per_side: usize, seed: u64) -> Result<Vec<(TheoremInputs, bool)>> {
    let mut g = rng::stream(seed, &[4]);
    let mut found = [Vec::new(), Vec::new()];
    for _ in 0..MAX_DRAWS {
        if found.iter().all(|f| f.len() >= per_side) {
            break;
        }
        let i = sample_inputs(&mut g);
        let cf = reconstruction_closed_form(&i)?;
        let (lg, lp) = (cf.marginalised.group, cf.marginalised.population);
        if (lg - lp).abs() < SIGN_MARGIN * lg.max(lp) {
            continue;
        }
        let side = theorem2_predicate(&i)?;
        if found[side as usize].len() < per_side {
            found[side as usize].push(i);
        }
    }
    if found.iter().any(|f| f.len() < per_side) {
        return Err(Error::Precondition(
            "could not draw enough separated inputs".into(),
        ));
    }
    let [no, yes] = found;
    Ok(yes
        .into_iter()
        .map(|i| (i, true))
        .chain(no.into_iter().map(|i| (i, false)))
        .collect())
}

/// Runs every theorem check configured by `settings`.
pub fn run_validation(settings: &ValidationConfig, master_seed: u64) -> Result<ValidationOutput> {
    let seed = rng::derive_seed(master_seed, &[6]);
    let mut g = rng::stream(seed, &[1]);
    let cases: Vec<TheoremInputs> = (0..settings.cases).map(|_| sample_inputs(&mut g)).collect();
    let mc = monte_carlo_rows(
        &cases,
        settings.samples_per_group,
        settings.relative_tolerance,
        rng::derive_seed(seed, &[5]),
    )?;
    let mut rows: Vec<ValidationRow> = mc.into_iter().flatten().collect();
    let monte_carlo_failures = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.case)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let max_relative_error = rows
        .iter()
        .filter_map(|r| r.relative_error)
        .fold(0.0, f64::max);

    let (theorem2_disagreements, theorem3_disagreements, theorem3_positives) =
        predicate_disagreements(settings.predicate_inputs, seed)?;
    for (name, count) in [
        ("theorem2_predicate", theorem2_disagreements),
        ("theorem3_predicate", theorem3_disagreements),
    ] {
        rows.push(ValidationRow {
            check: name.into(),
            case: 0,
            quantity: "disagreements".into(),
            closed_form: None,
            empirical: Some(count as f64),
            relative_error: None,
            passed: count == 0,
        });
    }

    let boundary = theorem2_boundary_inputs(SIGN_CHECKS_PER_SIDE, seed)?;
    let sign_rows: Vec<ValidationRow> = boundary
        .par_iter()
        .enumerate()
        .map(|(k, (inputs, predicted))| {
            let r = monte_carlo_validate(
                inputs,
                settings.samples_per_group,
                rng::derive_seed(seed, &[7, k as u64]),
            )?;
            let observed = r.group_marginalised.empirical > r.population_marginalised.empirical;
            Ok(ValidationRow {
                check: "theorem2_sign".into(),
                case: k,
                quantity: if *predicted {
                    "group_worse".into()
                } else {
                    "group_not_worse".into()
                },
                closed_form: Some(
                    r.group_marginalised.closed_form - r.population_marginalised.closed_form,
                ),
                empirical: Some(
                    r.group_marginalised.empirical - r.population_marginalised.empirical,
                ),
                relative_error: None,
                passed: observed == *predicted,
            })
        })
        .collect::<Result<_>>()?;
    let sign_failures = sign_rows.iter().filter(|r| !r.passed).count();
    let sign_checks = sign_rows.len();
    rows.extend(sign_rows);

    Ok(ValidationOutput {
        rows,
        summary: ValidationSummary {
            monte_carlo_cases: settings.cases,
            monte_carlo_failures,
            max_relative_error,
            relative_tolerance: settings.relative_tolerance,
            predicate_inputs: settings.predicate_inputs,
            theorem2_disagreements,
            theorem3_disagreements,
            theorem3_positives,
            sign_checks,
            sign_failures,
        },
    })
}

/// Validation with the settings of `config` (defaults when absent).
pub fn run_validation_for(config: &ExperimentConfig) -> Result<ValidationOutput> {
    run_validation(
        &config.validation.clone().unwrap_or_default(),
        config.master_seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_validation_passes_and_writes() {
        let settings = ValidationConfig {
            cases: 2,
            samples_per_group: 200_000,
            relative_tolerance: 0.05,
            predicate_inputs: 500,
        };
        let out = run_validation(&settings, 9).unwrap();
        assert!(out.summary.passed(), "{:?}", out.summary);
        assert_eq!(out.summary.sign_checks, 2 * SIGN_CHECKS_PER_SIDE);
        assert_eq!(
            out.rows.iter().filter(|r| r.check == "monte_carlo").count(),
            8
        );
        let dir = tempfile::tempdir().unwrap();
        out.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("validation.csv")).unwrap();
        assert!(text.starts_with("check,case,quantity,closed_form,empirical,relative_error,passed"));
    }

    #[test]
    fn boundary_inputs_are_separated_and_balanced() {
        let picks = theorem2_boundary_inputs(5, 3).unwrap();
        assert_eq!(picks.iter().filter(|(_, s)| *s).count(), 5);
        for (i, side) in &picks {
            assert_eq!(theorem2_predicate(i).unwrap(), *side);
            let cf = reconstruction_closed_form(i).unwrap();
            let (a, b) = (cf.marginalised.group, cf.marginalised.population);
            assert!((a - b).abs() >= SIGN_MARGIN * a.max(b));
        }
    }
}
