//! The modelling pipeline by hand: generate, mask (S3), split, impute, train,
//! score and audit, including a JSON round trip of the fitted imputer.
//!
//! `cargo run --release --example impute_predict`

use fairimpute::data::{split_masked, MaskedCohort, SplitSpec};
use fairimpute::impute::{fit_transform, FittedImputer, ImputerSpec, Strategy};
use fairimpute::metrics::{auc, threshold_metrics};
use fairimpute::missingness::{apply_scenario, Scenario, ScenarioSpec};
use fairimpute::predict::{train, LogisticSpec};
use fairimpute::synthgen::{generate, PopulationSpec};

fn main() -> fairimpute::Result<()> {
    let mut population = PopulationSpec::reference_base(3);
    population.n_majority = 20_000;
    population.n_marginalised = 400;
    let cohort = generate(&population)?;
    let mask = apply_scenario(&cohort, &ScenarioSpec::reference(Scenario::S3, 4))?;
    let data = MaskedCohort::new(cohort, mask)?;
    let parts = split_masked(&data, &SplitSpec::new(0.8, 0.0, 0.2, 5)?)?;
    let test = parts.test.expect("test fraction is positive");

    for spec in [
        ImputerSpec::new(Strategy::PopulationMean),
        ImputerSpec::new(Strategy::GroupMean),
        ImputerSpec::new(Strategy::Mice).with_seed(6),
        ImputerSpec::new(Strategy::PopulationMean).with_indicators(true),
    ] {
        let (fitted, completed) = fit_transform(&parts.train, &spec)?;
        let fitted = FittedImputer::from_json(&fitted.to_json()?)?;
        let model = train(
            &completed,
            parts.train.outcome(),
            &LogisticSpec::fixed(1.0),
            None,
        )?;
        let scores = model.predict(&fitted.transform(&test)?)?;

        let a = auc(&scores, test.outcome(), test.group())?;
        let t = threshold_metrics(&scores, test.outcome(), test.group(), 0.30)?;
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:+.3}"));
        println!(
            "{:<28} auc {} (marg {}, gap {})  fnr@0.30 gap {}",
            spec.label(),
            show(a.overall),
            show(a.marginalised()),
            show(a.gap),
            show(t.fnr.gap)
        );
    }
    Ok(())
}
