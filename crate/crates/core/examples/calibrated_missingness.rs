//! Masks a Gaussian covariate with a target observation rate and
//! `Corr(O, X)` per group, then compares the measured reconstruction errors
//! of group-mean and population-mean imputation with their closed forms.
//!
//! `cargo run --release --example calibrated_missingness`

use fairimpute::data::{Cohort, MaskedCohort};
use fairimpute::impute::{fit_transform, ImputerSpec, Strategy};
use fairimpute::metrics::reconstruction_error;
use fairimpute::missingness::{apply_calibrated, describe, CalibratedMechanismSpec};
use fairimpute::numeric::{rng, DenseMatrix};
use fairimpute::theory::{
    reconstruction_closed_form, theorem2_predicate, GroupSpec, TheoremInputs,
};

fn main() -> fairimpute::Result<()> {
    let (n_rest, n_marg) = (300_000, 100_000);
    let (mean, sd) = ([0.0, 0.8], [1.0, 0.7]);
    let (alpha, rho) = ([0.9, 0.6], [0.1, -0.35]);

    let mut g = rng::stream(42, &[]);
    let mut values = Vec::new();
    let mut group = Vec::new();
    for (k, n) in [n_rest, n_marg].into_iter().enumerate() {
        for _ in 0..n {
            values.push(mean[k] + sd[k] * rng::standard_normal(&mut g));
            group.push(k == 1);
        }
    }
    let n = values.len();
    let cohort = Cohort::new(DenseMatrix::from_vec(n, 1, values)?, group, vec![false; n])?;
    let mask = apply_calibrated(
        &cohort,
        &CalibratedMechanismSpec {
            observation_rate: alpha,
            correlation: rho,
            target_covariate: 0,
            seed: 7,
        },
    )?;
    let d = describe(&cohort, &mask, 0)?;
    for (name, gd) in ["rest", "marginalised"].iter().zip(&d.groups) {
        println!(
            "{name:<13} alpha {:.3} (target {:.2})  corr {:+.3} (target {:+.2})",
            gd.observation_rate,
            alpha[(*name == "marginalised") as usize],
            gd.correlation.unwrap_or(f64::NAN),
            rho[(*name == "marginalised") as usize],
        );
    }

    let spec = |k: usize| GroupSpec {
        alpha: alpha[k],
        rho: rho[k],
        sd: sd[k],
        mean: Some(mean[k]),
        ..GroupSpec::default()
    };
    let inputs = TheoremInputs::new(n_marg as f64 / n as f64, spec(1), spec(0))?;
    let cf = reconstruction_closed_form(&inputs)?;

    let data = MaskedCohort::new(cohort.clone(), mask.clone())?;
    for (strategy, closed) in [
        (Strategy::GroupMean, cf.marginalised.group),
        (Strategy::PopulationMean, cf.marginalised.population),
    ] {
        let (_, result) = fit_transform(&data, &ImputerSpec::new(strategy))?;
        let measured =
            reconstruction_error(cohort.covariates(), &mask, &result, cohort.group(), Some(0))?;
        println!(
            "{:<15} marginalised error: measured {:.4}, closed form {:.4}",
            strategy.name(),
            measured.marginalised().unwrap_or(f64::NAN),
            closed
        );
    }
    println!(
        "group mean worse for the marginalised group: {}",
        theorem2_predicate(&inputs)?
    );
    Ok(())
}
