//! Acceptance suite. Runs each criterion at its stated tolerance over seeds
//! 1..=10 and prints one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};

use physinet::nn::gradcheck::{self, GradCheckOptions};
use physinet::trainer::build_models;
use physinet::{
    run_lifecycle_with, weight_ratio, Case1Config, Case2Config, CombinerWeights, LifecycleReport,
    Scenario, StepRecord, TrainerConfig,
};
use physinet_cli::commands::run_seeds;
use physinet_cli::{CaseKind, RunSettings};

const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

struct Outcome {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn lifecycles(case: CaseKind) -> Vec<LifecycleReport> {
    let settings = RunSettings {
        case: Some(case),
        seeds: SEEDS.collect(),
        ..RunSettings::default()
    };
    run_seeds(&settings, None)
        .expect("lifecycle runs")
        .into_iter()
        .map(|(_, r)| r)
        .collect()
}

fn at(report: &LifecycleReport, step: usize) -> &StepRecord {
    report.record(step).expect("step recorded")
}

fn count(reports: &[LifecycleReport], pred: impl Fn(&LifecycleReport) -> bool) -> usize {
    reports.iter().filter(|r| pred(r)).count()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    h / 3.0 * (f(a) + inner + f(b))
}

fn ac1(case1: &[LifecycleReport]) -> Outcome {
    // Expected physics-only MSE: mean squared model error over U[0, 10]
    // plus the noise variance.
    let oracle = simpson(|x| (0.1 * x * x - x + 5.0).powi(2), 0.0, 10.0, 1000) / 10.0 + 0.25;
    let oracle_ok = (oracle - 11.9167).abs() < 1e-4;
    let values: Vec<f64> = case1.iter().map(|r| at(r, 0).mse_physics_only).collect();
    let in_band = values.iter().filter(|v| (*v - 11.92).abs() <= 0.6).count();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    Outcome {
        id: "AC1 case1 physics-only MSE 11.92 +/- 0.6",
        passed: oracle_ok && in_band == values.len(),
        detail: format!("oracle {oracle:.4}; {in_band}/10 seeds in band; range [{lo:.4}, {hi:.4}]"),
    }
}

fn ac2(case1: &[LifecycleReport]) -> Outcome {
    let below_physics = count(case1, |r| at(r, 9).mse_physinet < at(r, 9).mse_physics_only);
    let below_two = count(case1, |r| at(r, 9).mse_physinet < 2.0);
    Outcome {
        id: "AC2 case1 crossover at step 9",
        passed: below_physics >= 9 && below_two >= 8,
        detail: format!(
            "< physics in {below_physics}/10 (need 9); < 2.0 in {below_two}/10 (need 8)"
        ),
    }
}

fn ac3(case1: &[LifecycleReport]) -> Outcome {
    let m = median(case1.iter().map(|r| at(r, 99).mse_physinet).collect());
    Outcome {
        id: "AC3 case1 median final PhysiNet MSE in [0.25, 0.5]",
        passed: (0.25..=0.5).contains(&m),
        detail: format!("median {m:.4}"),
    }
}

fn ac4(case1: &[LifecycleReport]) -> Outcome {
    let wins = count(case1, |r| at(r, 99).mse_physinet <= at(r, 99).mse_nn_only);
    Outcome {
        id: "AC4 case1 PhysiNet <= NN-only at step 99",
        passed: wins >= 7,
        detail: format!("{wins}/10 seeds (need 7)"),
    }
}

fn ac5(case1: &[LifecycleReport]) -> Outcome {
    let initial = case1
        .iter()
        .map(|r| weight_ratio(&r.initial_weights))
        .all(|ratio| ratio == Some(99.0));
    let default_ratio = weight_ratio(&CombinerWeights::default()) == Some(99.0);
    let early = count(case1, |r| {
        r.records
            .iter()
            .take_while(|rec| rec.step <= 20)
            .any(|rec| rec.weight_ratio.is_some_and(|q| q < 2.0))
    });
    let finals: Vec<Option<f64>> = case1.iter().map(|r| at(r, 99).weight_ratio).collect();
    let final_ok = finals
        .iter()
        .all(|q| q.is_some_and(|q| (0.3..=3.0).contains(&q)));
    let shown: Vec<String> = finals
        .iter()
        .map(|q| q.map_or_else(|| "undefined".into(), |q| format!("{q:.2}")))
        .collect();
    Outcome {
        id: "AC5 weight-ratio dynamics",
        passed: initial && default_ratio && early >= 8 && final_ok,
        detail: format!(
            "initial 99 exactly: {}; < 2 by step 20 in {early}/10 (need 8); final ratios [{}]",
            initial && default_ratio,
            shown.join(", ")
        ),
    }
}

fn ac6(case2: &[LifecycleReport]) -> Outcome {
    let constant = case2.iter().all(|r| {
        r.records.len() == 100
            && r.records.iter().all(|rec| {
                rec.mse_physics_only.to_bits() == r.records[0].mse_physics_only.to_bits()
            })
    });
    let beats_physics = count(case2, |r| {
        r.records
            .iter()
            .filter(|rec| rec.step >= 9)
            .all(|rec| rec.mse_physinet < rec.mse_physics_only)
    });
    let beats_nn = count(case2, |r| at(r, 99).mse_physinet <= at(r, 99).mse_nn_only);
    Outcome {
        id: "AC6 case2 ordering properties",
        passed: constant && beats_physics >= 9 && beats_nn >= 7,
        detail: format!(
            "(a) physics MSE constant: {constant}; (b) {beats_physics}/10 (need 9); (c) {beats_nn}/10 (need 7)"
        ),
    }
}

fn ac7() -> Outcome {
    let opts = GradCheckOptions::new(0);
    let report = gradcheck::run(&opts).expect("gradcheck runs");
    let shape_ok = opts.cases_per_architecture == 50
        && opts.architectures == vec![vec![1, 10, 10, 1], vec![1, 4, 1]]
        && report.cases == 100;
    Outcome {
        id: "AC7 gradient check < 1e-5",
        passed: shape_ok && report.max_relative_error < 1e-5,
        detail: format!(
            "max relative error {:.3e} over {} cases",
            report.max_relative_error, report.cases
        ),
    }
}

fn ac8(case1: &[LifecycleReport], case2: &[LifecycleReport]) -> Outcome {
    let mut identical = 0;
    let mut total = 0;
    for (scenario, reports) in [
        (Scenario::Case1(Case1Config::default()), case1),
        (Scenario::Case2(Case2Config::default()), case2),
    ] {
        let before = serde_json::to_string(&scenario.physics().unwrap()).unwrap();
        for r in reports {
            total += 1;
            assert_eq!(r.records.len(), 100);
            let after = serde_json::to_string(r.physinet.physics()).unwrap();
            let after_report = serde_json::to_string(&r.scenario.physics().unwrap()).unwrap();
            if before == after && before == after_report {
                identical += 1;
            }
        }
    }
    Outcome {
        id: "AC8 physics parameters unchanged by training",
        passed: identical == total,
        detail: format!("{identical}/{total} runs bit-identical"),
    }
}

fn cli_run(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let status = Command::new(env!("CARGO_BIN_EXE_physinet"))
        .args(["run", "--case", "case1", "--seeds", "7", "--out"])
        .arg(dir)
        .output()
        .expect("spawn physinet");
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn ac9() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = cli_run(a.path());
    let second = cli_run(b.path());
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    Outcome {
        id: "AC9 repeated CLI runs give byte-identical CSVs",
        passed: first.len() >= 2 && first == second,
        detail: format!("compared {}", names.join(", ")),
    }
}

fn ac10() -> Outcome {
    let mut exact = 0;
    let mut total = 0;
    for scenario in [
        Scenario::Case1(Case1Config::default()),
        Scenario::Case2(Case2Config::default()),
    ] {
        let config = TrainerConfig::with_seed(1);
        let (mut physinet, nn_only) = build_models(&scenario, &config).unwrap();
        physinet.weights = CombinerWeights::new(1.0, 0.0);
        physinet.freeze_combiner = true;
        let report = run_lifecycle_with(&scenario, &config, physinet, nn_only).unwrap();
        for rec in &report.records {
            total += 1;
            if rec.mse_physinet.to_bits() == rec.mse_physics_only.to_bits() {
                exact += 1;
            }
        }
    }
    Outcome {
        id: "AC10 frozen (1, 0) combiner reproduces physics-only MSE bitwise",
        passed: exact == total,
        detail: format!("{exact}/{total} step records bit-identical"),
    }
}

fn main() -> ExitCode {
    // The `--list` probe from the test runner expects no output side effects.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let (case1, case2) = rayon::join(
        || lifecycles(CaseKind::Case1),
        || lifecycles(CaseKind::Case2),
    );
    let outcomes = [
        ac1(&case1),
        ac2(&case1),
        ac3(&case1),
        ac4(&case1),
        ac5(&case1),
        ac6(&case2),
        ac7(),
        ac8(&case1, &case2),
        ac9(),
        ac10(),
    ];
    for o in &outcomes {
        println!(
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        outcomes.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
