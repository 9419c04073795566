use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use physinet::nn::gradcheck::{self, GradCheckOptions};
use physinet::trainer::build_models;
use physinet::{
    run_lifecycle_with, LifecycleReport, ModelSnapshot, PhysiNetModel, Rng, StepRecord,
};
use rayon::prelude::*;
use serde_json::Value;

use crate::config::RunSettings;
use crate::svg::{Chart, Scale, Series};
use crate::table;
use crate::{Cli, Command, GradcheckArgs, PlotArgs, PlotKind, RunArgs, SampleArgs, SettingsArgs};

pub fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run(&args).map(|_| ExitCode::SUCCESS),
        Command::Plot(args) => plot(&args).map(|_| ExitCode::SUCCESS),
        Command::Gradcheck(args) => Ok(if gradcheck(&args)? {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }),
        Command::Sample(args) => sample(&args).map(|_| ExitCode::SUCCESS),
    }
}

fn base_settings(args: &SettingsArgs) -> Result<RunSettings> {
    let mut settings = RunSettings::default();
    if let Some(path) = &args.config {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        settings
            .apply_json(&text)
            .with_context(|| format!("in config file {}", path.display()))?;
    }
    if let Some(case) = args.case {
        settings.case = Some(case);
    }
    for assignment in &args.overrides {
        settings.apply_assignment(assignment)?;
    }
    Ok(settings)
}

/// Resolves defaults, config file, `--set` overrides and dedicated flags,
/// in increasing order of precedence.
pub fn resolve_settings(args: &RunArgs) -> Result<RunSettings> {
    let mut settings = base_settings(&args.settings)?;
    let flags: [(&str, Option<Value>); 8] = [
        ("seeds", args.seeds.clone().map(Value::from)),
        ("steps", args.steps.map(Value::from)),
        ("points-per-step", args.points_per_step.map(Value::from)),
        ("epochs", args.epochs.map(Value::from)),
        ("minibatch", args.minibatch.map(Value::from)),
        ("lr", args.lr.map(Value::from)),
        ("test-size", args.test_size.map(Value::from)),
        (
            "out",
            args.out
                .as_ref()
                .map(|p| Value::from(p.to_string_lossy().into_owned())),
        ),
    ];
    for (key, value) in flags {
        if let Some(value) = value {
            settings.set(key, &value)?;
        }
    }
    settings.validate()?;
    Ok(settings)
}

fn load_snapshot(path: &Path, settings: &RunSettings) -> Result<PhysiNetModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let snapshot: ModelSnapshot =
        serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))?;
    let expected = settings.scenario()?.physics()?;
    if std::mem::discriminant(&snapshot.physics) != std::mem::discriminant(&expected) {
        bail!(
            "model {} was saved for a different case than {}",
            path.display(),
            settings.case()?.as_str()
        );
    }
    Ok(PhysiNetModel::from_snapshot(snapshot)?)
}

/// Runs every seed of `settings` and returns the reports in seed order.
pub fn run_seeds(
    settings: &RunSettings,
    init: Option<&PhysiNetModel>,
) -> Result<Vec<(u64, LifecycleReport)>> {
    let scenario = settings.scenario()?;
    settings
        .seeds
        .par_iter()
        .map(|&seed| {
            let config = settings.trainer_for(seed);
            let (fresh, nn_only) = build_models(&scenario, &config)?;
            let physinet = init.cloned().unwrap_or(fresh);
            let report = run_lifecycle_with(&scenario, &config, physinet, nn_only)
                .with_context(|| format!("seed {seed}"))?;
            Ok((seed, report))
        })
        .collect()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(args: &RunArgs) -> Result<()> {
    let settings = resolve_settings(args)?;
    let init = args
        .init_model
        .as_deref()
        .map(|p| load_snapshot(p, &settings))
        .transpose()?;
    let reports = run_seeds(&settings, init.as_ref())?;

    let dir = &settings.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let case = settings.case()?.as_str();
    let file = |stem: &str, seed: u64, ext: &str| dir.join(format!("{stem}_{case}_{seed}.{ext}"));

    for (seed, report) in &reports {
        write(
            &file("steps", *seed, "csv"),
            &table::steps_csv(&report.records),
        )?;
        write(
            &file("snapshots", *seed, "csv"),
            &table::snapshots_csv(report),
        )?;
        let model = serde_json::to_string_pretty(&report.physinet.snapshot())?;
        write(&file("model", *seed, "json"), &format!("{model}\n"))?;
    }
    let runs: Vec<(u64, &[StepRecord])> = reports
        .iter()
        .map(|(seed, r)| (*seed, r.records.as_slice()))
        .collect();
    write(
        &dir.join(format!("summary_{case}.csv")),
        &table::summary_csv(&runs),
    )?;

    println!(
        "{:>6} {:>14} {:>14} {:>14} {:>10}",
        "seed", "physinet", "nn_only", "physics_only", "ratio"
    );
    for (seed, report) in &reports {
        if let Some(last) = report.records.last() {
            let ratio = last
                .weight_ratio
                .map_or_else(|| table::UNDEFINED.to_owned(), |r| format!("{r:.4}"));
            println!(
                "{seed:>6} {:>14.6e} {:>14.6e} {:>14.6e} {ratio:>10}",
                last.mse_physinet, last.mse_nn_only, last.mse_physics_only
            );
        }
    }
    println!(
        "wrote results for {} seed(s) to {}",
        reports.len(),
        dir.display()
    );
    Ok(())
}

pub fn chart_for(records: &[StepRecord], kind: PlotKind, title: String) -> Chart {
    let series = |label: &str, f: &dyn Fn(&StepRecord) -> Option<f64>| Series {
        label: label.to_owned(),
        points: records
            .iter()
            .filter_map(|r| f(r).map(|v| (r.step as f64, v)))
            .collect(),
    };
    match kind {
        PlotKind::Mse => Chart {
            title,
            x_label: "lifecycle step".into(),
            y_label: "test MSE".into(),
            y_scale: Scale::Log10,
            series: vec![
                series("physinet", &|r| Some(r.mse_physinet)),
                series("nn_only", &|r| Some(r.mse_nn_only)),
                series("physics_only", &|r| Some(r.mse_physics_only)),
            ],
        },
        PlotKind::WeightRatio => Chart {
            title,
            x_label: "lifecycle step".into(),
            y_label: "w_physi / w_nn".into(),
            y_scale: Scale::Linear,
            series: vec![series("weight ratio", &|r| r.weight_ratio)],
        },
    }
}

fn plot(args: &PlotArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let records =
        table::parse_steps_csv(&text).with_context(|| format!("in {}", args.input.display()))?;
    let title = args
        .input
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let chart = chart_for(&records, args.kind, title);
    write(&args.output, &chart.render())?;
    println!("wrote {}", args.output.display());
    Ok(())
}

fn gradcheck(args: &GradcheckArgs) -> Result<bool> {
    let opts = GradCheckOptions {
        cases_per_architecture: args.cases,
        corrupt: args.corrupt,
        ..GradCheckOptions::new(args.seed)
    };
    let report = gradcheck::run(&opts)?;
    println!(
        "max relative error {:.3e} over {} cases (tolerance {:e})",
        report.max_relative_error,
        report.cases,
        gradcheck::TOLERANCE
    );
    if report.passed() {
        println!("PASS");
    } else {
        println!("FAIL");
        if let Some(worst) = &report.worst {
            println!("worst parameter: {worst}");
        }
    }
    Ok(report.passed())
}

fn sample(args: &SampleArgs) -> Result<()> {
    let settings = base_settings(&args.settings)?;
    let scenario = settings.scenario()?;
    scenario.validate()?;
    let batch = scenario.sample(args.points, &mut Rng::new(args.seed))?;
    let mut out = Vec::new();
    batch.write_csv(&mut out, scenario.csv_header())?;
    let path: PathBuf = args.output.clone();
    fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {} points to {}", batch.len(), path.display());
    Ok(())
}
