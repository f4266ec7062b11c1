//! CSV emission. Column order is fixed; absent or unrequested values are
//! empty fields, so every file from one subcommand has the same header.

use std::time::{SystemTime, UNIX_EPOCH};

use effcap::config::{Output, SweepSpec};
use effcap::queuesim::{QueueCheck, QueueFinding, RateRun, ValidationReport};
use effcap::{CapacityResult, Result};

use crate::Failure;

pub const CAPACITY_COLUMNS: [&str; 9] = [
    "rate_bits_per_block",
    "case_tag",
    "theta_bar",
    "theta_tilde_sol",
    "theta_hat_sol",
    "tau_sol",
    "tau0",
    "upper_bound",
    "status",
];

pub const VALIDATION_COLUMNS: [&str; 11] = [
    "phase",
    "arrival_rate",
    "seed",
    "queue",
    "target_exponent",
    "finding",
    "exponent",
    "r_squared",
    "points_used",
    "meets",
    "misses",
];

pub fn timestamp_line() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    format!("# effcap {} generated at unix time {secs}\n", env!("CARGO_PKG_VERSION"))
}

/// Which optional outputs are filled in.
pub struct Columns {
    capacity: bool,
    case_tag: bool,
    theta_bar: bool,
    exponents: bool,
    tau: bool,
    upper_bound: bool,
}

impl Columns {
    pub fn all() -> Self {
        Columns {
            capacity: true,
            case_tag: true,
            theta_bar: true,
            exponents: true,
            tau: true,
            upper_bound: true,
        }
    }

    pub fn for_spec(spec: &SweepSpec) -> Self {
        Columns {
            capacity: spec.wants(Output::Capacity),
            case_tag: spec.wants(Output::CaseTag),
            theta_bar: spec.wants(Output::ThetaBar),
            exponents: spec.wants(Output::Exponents),
            tau: spec.wants(Output::Tau),
            upper_bound: spec.wants(Output::UpperBound),
        }
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(on: bool, v: Option<f64>) -> String {
    match v {
        Some(v) if on => num(v),
        _ => String::new(),
    }
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::Io(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> std::result::Result<Vec<u8>, Failure> {
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

/// One row per grid point: axis values, then [`CAPACITY_COLUMNS`].
pub fn capacity_table(
    axes: &[&str],
    rows: &[(Vec<f64>, &Result<CapacityResult>)],
    cols: &Columns,
) -> std::result::Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(axes.iter().copied().chain(CAPACITY_COLUMNS)).map_err(csv_err)?;
    for (coords, outcome) in rows {
        let mut rec: Vec<String> = coords.iter().map(|&v| num(v)).collect();
        match outcome {
            Ok(r) => {
                let status = if r.supremum { "ok-supremum" } else { "ok" };
                rec.extend([
                    opt(cols.capacity, Some(r.rate)),
                    if cols.case_tag { r.case.to_string() } else { String::new() },
                    opt(cols.theta_bar, r.theta_bar),
                    opt(cols.exponents, r.theta_tilde),
                    opt(cols.exponents, r.theta_hat),
                    opt(cols.tau, r.tau),
                    opt(cols.tau, r.tau0),
                    opt(cols.upper_bound, Some(r.upper_bound)),
                    status.to_string(),
                ]);
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), CAPACITY_COLUMNS.len() - 1));
                rec.push(e.kind().to_string());
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

fn finding(check: &QueueCheck) -> (&'static str, String, String, String) {
    match &check.finding {
        QueueFinding::Empty => ("empty", String::new(), String::new(), String::new()),
        QueueFinding::Unstable => ("unstable", String::new(), String::new(), String::new()),
        QueueFinding::Fitted(t) => {
            let label = if t.usable { "fitted" } else { "poor_fit" };
            (label, num(t.exponent()), num(t.r_squared), t.points_used.to_string())
        }
        QueueFinding::InsufficientTail { usable } => ("insufficient_tail", String::new(), String::new(), usable.to_string()),
    }
}

/// Per-seed, per-queue findings, then a closing verdict comment.
pub fn validation_table(rep: &ValidationReport) -> std::result::Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(VALIDATION_COLUMNS).map_err(csv_err)?;
    let phases: [(&str, &[RateRun]); 2] = [("lower", &rep.lower), ("upper", &rep.upper)];
    for (phase, runs) in phases {
        for run in runs {
            for (queue, check) in [("source", &run.source), ("relay", &run.relay)] {
                let (label, exponent, r2, points) = finding(check);
                w.write_record([
                    phase.to_string(),
                    num(run.rate),
                    run.seed.to_string(),
                    queue.to_string(),
                    num(check.target),
                    label.to_string(),
                    exponent,
                    r2,
                    points,
                    check.meets.to_string(),
                    check.misses.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    let mut bytes = finish(w)?;
    bytes.extend_from_slice(
        format!(
            "# verdict {} (lower {}/{}, upper {}/{}, need {})\n",
            if rep.pass { "PASS" } else { "FAIL" },
            rep.lower_passes,
            rep.lower.len(),
            rep.upper_passes,
            rep.upper.len(),
            rep.required_seeds()
        )
        .as_bytes(),
    );
    Ok(bytes)
}
