//! CSV output of lifecycle results, and the reader `plot` uses.
//!
//! Floats are written with 17 significant digits so they round-trip
//! bit-exactly. An undefined weight ratio is written as `undefined`.

use std::fmt::Write as _;

use physinet::{LifecycleReport, StepRecord};
use thiserror::Error;

pub const STEPS_HEADER: &str =
    "step,mse_physinet,mse_nn_only,mse_physics_only,w_physi,w_nn,weight_ratio";
pub const SNAPSHOTS_HEADER: &str = "step,variant,x,y_hat";
pub const SUMMARY_HEADER: &str =
    "seed,step,mse_physinet,mse_nn_only,mse_physics_only,w_physi,w_nn,weight_ratio";
pub const UNDEFINED: &str = "undefined";

/// Steps reported in the cross-seed summary.
pub fn summary_steps(total: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..total)
        .filter(|s| *s == 0 || (s + 1) % 10 == 0)
        .collect();
    if let Some(last) = total.checked_sub(1) {
        if steps.last() != Some(&last) {
            steps.push(last);
        }
    }
    steps
}

#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn ratio(r: Option<f64>) -> String {
    r.map_or_else(|| UNDEFINED.to_owned(), float)
}

fn record_fields(r: &StepRecord) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        r.step,
        float(r.mse_physinet),
        float(r.mse_nn_only),
        float(r.mse_physics_only),
        float(r.w_physi),
        float(r.w_nn),
        ratio(r.weight_ratio)
    )
}

pub fn steps_csv(records: &[StepRecord]) -> String {
    let mut out = String::from(STEPS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_fields(r));
        out.push('\n');
    }
    out
}

pub fn snapshots_csv(report: &LifecycleReport) -> String {
    let mut out = String::from(SNAPSHOTS_HEADER);
    out.push('\n');
    for snap in &report.snapshots {
        for (x, y) in &snap.points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                snap.step,
                snap.variant.as_str(),
                float(*x),
                float(*y)
            );
        }
    }
    out
}

/// One block of rows per seed, in the order given.
pub fn summary_csv(runs: &[(u64, &[StepRecord])]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for (seed, records) in runs {
        for step in summary_steps(records.len()) {
            if let Some(r) = records.iter().find(|r| r.step == step) {
                let _ = writeln!(out, "{seed},{}", record_fields(r));
            }
        }
    }
    out
}

pub fn parse_steps_csv(text: &str) -> Result<Vec<StepRecord>, CsvError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, header)) if header.trim_end() == STEPS_HEADER => {}
        Some((line, header)) => {
            return Err(CsvError {
                line,
                message: format!("expected header {STEPS_HEADER:?}, found {header:?}"),
            })
        }
        None => {
            return Err(CsvError {
                line: 1,
                message: "empty file".into(),
            })
        }
    }

    let mut records = Vec::new();
    for (line, text) in lines {
        if text.trim().is_empty() {
            continue;
        }
        let err = |message: String| CsvError { line, message };
        let fields: Vec<&str> = text.trim_end().split(',').collect();
        if fields.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", fields.len())));
        }
        let num = |i: usize, name: &str| -> Result<f64, CsvError> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| err(format!("{name}: not a number: {:?}", fields[i])))
        };
        let step = fields[0]
            .parse::<usize>()
            .map_err(|_| err(format!("step: not an integer: {:?}", fields[0])))?;
        let weight_ratio = match fields[6] {
            UNDEFINED => None,
            _ => Some(num(6, "weight_ratio")?),
        };
        records.push(StepRecord {
            step,
            mse_physinet: num(1, "mse_physinet")?,
            mse_nn_only: num(2, "mse_nn_only")?,
            mse_physics_only: num(3, "mse_physics_only")?,
            w_physi: num(4, "w_physi")?,
            w_nn: num(5, "w_nn")?,
            weight_ratio,
        });
    }
    if records.is_empty() {
        return Err(CsvError {
            line: 2,
            message: "no data rows".into(),
        });
    }
    Ok(records)
}
