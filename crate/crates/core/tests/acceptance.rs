//! Acceptance criteria, one test each. Every test writes a single
//! `PASS`/`FAIL` line straight to stdout (bypassing capture) before asserting.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use fairimpute::harness::config::{ExperimentConfig, MetricKind, MetricsConfig, ValidationConfig};
use fairimpute::harness::report::audit_signs;
use fairimpute::harness::simulate::CellRecord;
use fairimpute::harness::standin::{
    generate_standin, standin_audit_config, write_standin_csv, StandinSpec,
};
use fairimpute::harness::{
    run_csv_audit, run_region_scan, run_simulation, run_simulation_with_threads, run_validation,
    SimulationOutput,
};
use fairimpute::impute::{ImputerSpec, Strategy};
use fairimpute::missingness::{Scenario, ScenarioSpec};
use proptest::prelude::{any, prop};
use proptest::strategy::Strategy as _;

fn report(id: u32, passed: bool, detail: &str) {
    let line = format!(
        "criterion {id:>2}: {} {detail}\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn conclude(id: u32, checks: &[(bool, String)]) {
    let passed = checks.iter().all(|c| c.0);
    let detail: Vec<String> = checks
        .iter()
        .map(|(ok, s)| format!("[{}] {s}", if *ok { "ok" } else { "x" }))
        .collect();
    report(id, passed, &detail.join("; "));
    assert!(passed, "criterion {id} failed: {}", detail.join("; "));
}

fn within(value: Option<f64>, target: f64, tolerance: f64) -> bool {
    value.is_some_and(|v| (v - target).abs() <= tolerance)
}

fn show(v: Option<f64>) -> String {
    v.map_or("undefined".into(), |v| format!("{v:.4}"))
}

const POP: &str = "PopulationMean";
const GROUP: &str = "GroupMean";
const POP_IND: &str = "PopulationMean+indicators";

struct Reference {
    output: SimulationOutput,
    elapsed: Duration,
}

/// Base population, S1 to S3, both mean imputers plus population mean with
/// indicators, `λ = 1`, 100 repetitions.
fn reference_run() -> &'static Reference {
    static RUN: OnceLock<Reference> = OnceLock::new();
    RUN.get_or_init(|| {
        let config = ExperimentConfig {
            scenarios: [Scenario::S1, Scenario::S2, Scenario::S3]
                .map(|s| ScenarioSpec::reference(s, 0))
                .to_vec(),
            imputers: vec![
                ImputerSpec::new(Strategy::PopulationMean),
                ImputerSpec::new(Strategy::GroupMean),
                ImputerSpec::new(Strategy::PopulationMean).with_indicators(true),
            ],
            metrics: MetricsConfig {
                metrics: vec![MetricKind::ReconstructionError, MetricKind::Auc],
                capacities: vec![0.3],
            },
            repetitions: 100,
            master_seed: 2024,
            ..ExperimentConfig::reference_simulation()
        };
        let start = Instant::now();
        let output = run_simulation(&config).expect("reference simulation runs");
        Reference {
            output,
            elapsed: start.elapsed(),
        }
    })
}

fn mean(
    output: &SimulationOutput,
    scenario: &str,
    imputer: &str,
    metric: &str,
    group: &str,
) -> Option<f64> {
    output
        .report
        .find(scenario, imputer, metric, group)
        .and_then(|r| r.mean)
}

fn records<'a>(
    output: &'a SimulationOutput,
    scenario: &str,
    imputer: &str,
    metric: &str,
) -> Vec<&'a CellRecord> {
    output.cell(scenario, imputer, metric)
}

#[test]
fn criterion_01_s1_reconstruction() {
    let run = reference_run();
    let o = &run.output;
    let pop = mean(o, "S1", POP, "reconstruction_error", "marginalised");
    let grp = mean(o, "S1", GROUP, "reconstruction_error", "marginalised");
    conclude(
        1,
        &[
            (
                within(pop, 0.493, 0.05),
                format!("PopulationMean {} vs 0.493 ± 0.05", show(pop)),
            ),
            (
                within(grp, 0.062, 0.013),
                format!("GroupMean {} vs 0.062 ± 0.013", show(grp)),
            ),
            (
                run.elapsed < Duration::from_secs(300),
                format!(
                    "100 repetitions of 3 scenarios x 3 imputers in {:.0?}",
                    run.elapsed
                ),
            ),
        ],
    );
}

#[test]
fn criterion_02_s2_s3_sign_flips() {
    let o = &reference_run().output;
    let gap = |s: &str, i: &str| mean(o, s, i, "reconstruction_error", "gap");
    let cases = [
        ("S2", POP, 0.204, 0.021, true),
        ("S2", GROUP, -0.224, 0.009, false),
        ("S3", POP, -0.313, 0.010, false),
        ("S3", GROUP, 0.045, 0.035, true),
    ];
    let mut checks = Vec::new();
    for (s, i, target, sd, positive) in cases {
        let v = gap(s, i);
        let sign_ok = v.is_some_and(|v| if positive { v > 0.0 } else { v < 0.0 });
        checks.push((
            sign_ok && within(v, target, 3.0 * sd),
            format!("{s} {i} gap {} vs {target:+.3} ± {:.3}", show(v), 3.0 * sd),
        ));
    }
    conclude(2, &checks);
}

#[test]
fn criterion_03_s1_auc() {
    let o = &reference_run().output;
    let pop = mean(o, "S1", POP, "auc", "marginalised");
    let grp = mean(o, "S1", GROUP, "auc", "marginalised");
    let a = records(o, "S1", POP, "auc");
    let b = records(o, "S1", GROUP, "auc");
    let wins = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| {
            assert_eq!(x.repetition, y.repetition);
            matches!((x.values[2], y.values[2]), (Some(p), Some(g)) if g > p)
        })
        .count();
    conclude(
        3,
        &[
            (
                within(pop, 0.679, 0.12),
                format!("PopulationMean {} vs 0.679 ± 0.12", show(pop)),
            ),
            (
                within(grp, 0.872, 0.08),
                format!("GroupMean {} vs 0.872 ± 0.08", show(grp)),
            ),
            (
                wins >= 95,
                format!(
                    "GroupMean > PopulationMean in {wins}/{} repetitions",
                    a.len()
                ),
            ),
        ],
    );
}

#[test]
fn criterion_04_indicator_effect() {
    let o = &reference_run().output;
    let with = mean(o, "S3", POP_IND, "auc", "marginalised");
    let without = mean(o, "S3", POP, "auc", "marginalised");
    let a = records(o, "S3", POP, "auc");
    let b = records(o, "S3", POP_IND, "auc");
    let wins = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| matches!((x.values[2], y.values[2]), (Some(p), Some(q)) if q > p))
        .count();
    conclude(
        4,
        &[
            (
                within(with, 0.773, 0.10),
                format!("with indicators {} vs 0.773 ± 0.10", show(with)),
            ),
            (
                within(without, 0.641, 0.12),
                format!("without {} vs 0.641 ± 0.12", show(without)),
            ),
            (
                matches!((with, without), (Some(w), Some(n)) if w > n),
                format!(
                    "indicators improve the marginalised AUC in {wins}/{} repetitions",
                    a.len()
                ),
            ),
        ],
    );
}

fn validation() -> &'static fairimpute::harness::ValidationOutput {
    static RUN: OnceLock<fairimpute::harness::ValidationOutput> = OnceLock::new();
    RUN.get_or_init(|| run_validation(&ValidationConfig::default(), 31).expect("validation runs"))
}

#[test]
fn criterion_05_monte_carlo_losses() {
    let start = Instant::now();
    let s = &validation().summary;
    conclude(
        5,
        &[
            (
                s.monte_carlo_cases == 20 && s.monte_carlo_failures == 0,
                format!(
                    "{} of {} cases outside tolerance",
                    s.monte_carlo_failures, s.monte_carlo_cases
                ),
            ),
            (
                s.max_relative_error <= 0.02,
                format!(
                    "max relative error {:.4} at 10^6 samples per group (limit 0.02)",
                    s.max_relative_error
                ),
            ),
            (
                true,
                format!("validation suite took {:.0?}", start.elapsed()),
            ),
        ],
    );
}

#[test]
fn criterion_06_predicate_equivalence() {
    let s = &validation().summary;
    conclude(
        6,
        &[
            (
                s.predicate_inputs == 10_000 && s.theorem2_disagreements == 0,
                format!(
                    "theorem2_predicate: {} disagreements on {} inputs",
                    s.theorem2_disagreements, s.predicate_inputs
                ),
            ),
            (
                s.theorem3_disagreements == 0 && s.theorem3_positives > 0,
                format!(
                    "theorem3_predicate: {} disagreements on {} inputs ({} positive)",
                    s.theorem3_disagreements, s.predicate_inputs, s.theorem3_positives
                ),
            ),
            (
                s.sign_checks == 20 && s.sign_failures == 0,
                format!(
                    "empirical theorem2_predicate sign: {} of {} checks failed",
                    s.sign_failures, s.sign_checks
                ),
            ),
        ],
    );
}

#[test]
fn criterion_07_region_scan() {
    let dir = tempfile::tempdir().unwrap();
    let (cells, path) =
        run_region_scan(&ExperimentConfig::reference_simulation(), dir.path()).unwrap();
    let positive = cells
        .iter()
        .filter(|c| c.diff.is_some_and(|d| d > 0.0))
        .count();
    let negative = cells
        .iter()
        .filter(|c| c.diff.is_some_and(|d| d < 0.0))
        .count();
    let t3 = cells.iter().filter(|c| c.t3 == Some(true)).count();
    let lines = std::fs::read_to_string(path).unwrap().lines().count();
    conclude(
        7,
        &[
            (
                cells.len() == 101 * 101 && lines == 101 * 101 + 1,
                format!("{} cells written", cells.len()),
            ),
            (
                positive > 0 && negative > 0,
                format!("diff > 0 in {positive}, diff < 0 in {negative}"),
            ),
            (t3 > 0, format!("theorem3_predicate holds in {t3} cells")),
        ],
    );
}

#[test]
fn criterion_08_standin_audit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("standin.csv");
    write_standin_csv(&generate_standin(&StandinSpec::default()).unwrap(), &csv).unwrap();
    let config = standin_audit_config(csv, 7);
    let out = run_csv_audit(&config).unwrap();
    let labels: Vec<String> = config.imputers.iter().map(|i| i.label()).collect();
    let capacities = ["0.05", "0.30", "0.50"];

    let complete = labels.iter().all(|l| {
        capacities.iter().all(|c| {
            ["fnr", "prioritisation"].iter().all(|m| {
                out.report
                    .find("csv", l, &format!("{m}@{c}"), "gap")
                    .is_some_and(|r| r.is_ok() && r.mean.is_some())
            })
        })
    });
    let signs = audit_signs(&out.report.rows);

    let auc = |l: &str| {
        out.report
            .find("csv", l, "auc", "overall")
            .and_then(|r| r.mean)
    };
    let mut reversal = None;
    'search: for (i, a) in labels.iter().enumerate() {
        for b in &labels[i + 1..] {
            let (Some(x), Some(y)) = (auc(a), auc(b)) else {
                continue;
            };
            if (x - y).abs() > 0.01 {
                continue;
            }
            for c in capacities {
                let gap = |l: &str| {
                    out.report
                        .find("csv", l, &format!("fnr@{c}"), "gap")
                        .and_then(|r| r.mean)
                };
                if let (Some(p), Some(q)) = (gap(a), gap(b)) {
                    if p * q < 0.0 {
                        reversal = Some(format!(
                            "{a} (AUC {x:.4}, FNR gap {p:+.3}) vs {b} (AUC {y:.4}, FNR gap {q:+.3}) at capacity {c}"
                        ));
                        break 'search;
                    }
                }
            }
        }
    }
    conclude(
        8,
        &[
            (
                complete && out.report.errors().is_empty(),
                format!("{} imputers x 3 capacities reported", labels.len()),
            ),
            (
                signs.as_ref().is_ok_and(|&n| n == labels.len() * 7),
                format!("sign audit: {:?}", signs.map_err(|e| e.to_string())),
            ),
            (
                reversal.is_some(),
                reversal.unwrap_or_else(|| "no gap reversal found".into()),
            ),
        ],
    );
}

#[test]
fn criterion_09_property_suites() {
    let results = [
        (
            "observed-value preservation",
            run_property(
                128,
                (raw_cohort(), 0usize..4, any::<bool>(), any::<u64>()),
                |(r, s, i, seed)| observed_values_preserved(&r, s, i, seed),
            ),
        ),
        (
            "AUC transform invariance",
            run_property(
                512,
                (
                    prop::collection::vec((-2.0f64..2.0, any::<bool>()), 2..80),
                    -5.0f64..5.0,
                    0.1f64..3.0,
                ),
                |(d, shift, scale)| {
                    let (s, y): (Vec<f64>, Vec<bool>) = d.into_iter().unzip();
                    auc_invariant_under_increasing_transform(&s, &y, shift, scale)
                },
            ),
        ),
        (
            "FNR monotone in capacity",
            run_property(
                512,
                (
                    prop::collection::vec((0u8..10, any::<bool>(), any::<bool>()), 1..80),
                    0.01f64..1.0,
                    0.01f64..1.0,
                ),
                |(d, c1, c2)| {
                    let s: Vec<f64> = d.iter().map(|v| v.0 as f64).collect();
                    let y: Vec<bool> = d.iter().map(|v| v.1).collect();
                    let g: Vec<bool> = d.iter().map(|v| v.2).collect();
                    fnr_monotone_in_capacity(&s, &y, &g, c1, c2)
                },
            ),
        ),
        (
            "logistic gradient vs finite differences",
            run_property(
                512,
                (
                    prop::collection::vec(
                        (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, any::<bool>()),
                        3..30,
                    ),
                    prop::array::uniform4(-1.5f64..1.5),
                    0.01f64..10.0,
                ),
                |(rows, params, penalty)| {
                    gradient_matches_finite_differences(&rows, params, penalty)
                },
            ),
        ),
        (
            "constant-fill decomposition",
            run_property(
                512,
                (
                    prop::collection::vec((-4.0f64..4.0, any::<bool>()), 1..100),
                    -5.0f64..5.0,
                ),
                |(d, c)| {
                    let (v, o): (Vec<f64>, Vec<bool>) = d.into_iter().unzip();
                    constant_fill_decomposes(&v, &o, c)
                },
            ),
        ),
        (
            "population bias expansion",
            run_property(
                2048,
                any::<u64>().prop_map(|s| s),
                population_bias_forms_agree,
            ),
        ),
    ];
    let checks: Vec<(bool, String)> = results
        .into_iter()
        .map(|(name, r)| match r {
            Ok(()) => (true, name.to_string()),
            Err(e) => (false, format!("{name}: {e}")),
        })
        .collect();
    conclude(9, &checks);
}

#[test]
fn criterion_10_thread_determinism() {
    let config = ExperimentConfig {
        repetitions: 2,
        master_seed: 99,
        ..ExperimentConfig::reference_simulation()
    };
    let one = run_simulation_with_threads(&config, 1).unwrap();
    let four = run_simulation_with_threads(&config, 4).unwrap();
    let (a, b) = (one.report.to_csv().unwrap(), four.report.to_csv().unwrap());
    let (ra, rb) = (one.records_csv().unwrap(), four.records_csv().unwrap());
    conclude(
        10,
        &[
            (
                a == b,
                format!(
                    "report.csv identical at 1 and 4 threads ({} bytes)",
                    a.len()
                ),
            ),
            (
                ra == rb,
                format!("repetitions.csv identical ({} bytes)", ra.len()),
            ),
            (
                one.report.errors().is_empty(),
                format!("{} error cells", one.report.errors().len()),
            ),
        ],
    );
}
