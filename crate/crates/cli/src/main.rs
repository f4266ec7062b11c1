//! `effcap` command-line driver: compute one configuration, sweep a grid, or
//! cross-validate a capacity against the tandem-queue simulator.

mod table;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use effcap::config::{ProblemConfig, SweepSpec};
use effcap::par;
use effcap::queuesim::{self, ValidationBudget, ValidationReport};
use effcap::sweep::run_sweep;
use effcap::{effective_capacity, CapacityResult, Error};

#[derive(Parser, Debug)]
#[command(name = "effcap", version, about = "Effective capacity of two-hop decode-and-forward links")]
struct Cli {
    /// Worker threads for sweeps and simulation seeds.
    #[arg(long, env = "EFFCAP_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Effective capacity of one configuration.
    Compute(Common),
    /// Effective capacity over a one- or two-axis parameter grid.
    Sweep(Common),
    /// Check a computed capacity against simulated queue tails.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Relative offset of the two simulated rates from the capacity.
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
        /// Blocks per run (at least 10^4).
        #[arg(long, default_value_t = 10_000_000)]
        blocks: u64,
        /// Independent seeds per rate; seeds are 1..=N.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// CSV output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the timestamp line so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

/// Process exit statuses.
mod exit {
    pub const VALIDATION_FAILED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const STABILITY_VIOLATION: u8 = 3;
    pub const STABILITY_BOUNDARY: u8 = 4;
    pub const NUMERICAL: u8 = 5;
    pub const INSUFFICIENT_TAIL: u8 = 6;
    pub const IO: u8 = 7;
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Io(String),
    Validation,
    InsufficientTail,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation => exit::VALIDATION_FAILED,
            Failure::InsufficientTail => exit::INSUFFICIENT_TAIL,
            Failure::Io(_) => exit::IO,
            Failure::Core(e) => match e {
                Error::Config(_) | Error::InvalidParameter(_) => exit::CONFIG,
                Error::StabilityViolation { .. } => exit::STABILITY_VIOLATION,
                Error::StabilityBoundary { .. } => exit::STABILITY_BOUNDARY,
                Error::InsufficientTail { .. } => exit::INSUFFICIENT_TAIL,
                Error::DivergentMoment { .. }
                | Error::NumericalFailure(_)
                | Error::NoRootInBracket { .. }
                | Error::SupportDegenerate => exit::NUMERICAL,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: EFFCAP_THREADS must be at least 1");
            return ExitCode::from(exit::CONFIG);
        }
        par::set_threads(n);
    }
    let result = match &cli.command {
        Command::Compute(c) => compute(c),
        Command::Sweep(c) => sweep(c),
        Command::Simulate {
            common,
            margin,
            blocks,
            seeds,
        } => simulate(common, *margin, *blocks, *seeds),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error ({}): {e}", e.kind()),
                Failure::Io(e) => eprintln!("error (io): {e}"),
                Failure::Validation => eprintln!("validation FAILED"),
                Failure::InsufficientTail => eprintln!("validation FAILED: tails too thin to fit; raise --blocks"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn read_config(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Writes `body` to `--out` or stdout, preceded by the timestamp line unless
/// deterministic output was requested.
fn emit(common: &Common, body: &[u8]) -> Result<(), Failure> {
    let mut bytes = Vec::new();
    if !common.deterministic {
        bytes.extend_from_slice(table::timestamp_line().as_bytes());
    }
    bytes.extend_from_slice(body);
    match &common.out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => Ok(io::stdout().write_all(&bytes)?),
    }
}

/// Human-readable text goes to stdout unless stdout carries the CSV.
fn say(common: &Common, text: &str) {
    if common.out.is_some() {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
}

fn compute(common: &Common) -> Result<(), Failure> {
    let cfg = ProblemConfig::from_toml(&read_config(&common.config)?)?;
    let outcome = cfg.to_system().and_then(|s| effective_capacity(&s));
    let body = table::capacity_table(&[], &[(vec![], &outcome)], &table::Columns::all())?;
    emit(common, &body)?;
    match outcome {
        Ok(r) => {
            say(common, &summary(&r));
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

fn summary(r: &CapacityResult) -> String {
    let mut s = format!(
        "case {}: effective capacity {:.6} bits/block (upper bound {:.6})",
        r.case, r.rate, r.upper_bound
    );
    let opt = |name: &str, v: Option<f64>| v.map(|v| format!("\n  {name} = {v:.6e}")).unwrap_or_default();
    s += &opt("theta_bar", r.theta_bar);
    s += &opt("source exponent", r.theta_tilde);
    s += &opt("relay exponent", r.theta_hat);
    s += &opt("time share", r.tau);
    s += &opt("stability share bound", r.tau0);
    if r.supremum {
        s += "\n  rate is a supremum approached as the time share tends to its bound";
    }
    if r.degenerate {
        s += "\n  source rate is flat in the exponent; the defining equation holds everywhere";
    }
    s
}

fn sweep(common: &Common) -> Result<(), Failure> {
    let spec = SweepSpec::from_toml(&read_config(&common.config)?)?;
    let rows = run_sweep(&spec)?;
    let axes: Vec<&str> = spec.axes().iter().map(|a| a.name.name()).collect();
    let data: Vec<_> = rows.iter().map(|r| (r.coords.clone(), &r.outcome)).collect();
    let body = table::capacity_table(&axes, &data, &table::Columns::for_spec(&spec))?;
    emit(common, &body)?;
    let ok = rows.iter().filter(|r| r.outcome.is_ok()).count();
    say(common, &format!("{} grid points over {}, {ok} evaluated", rows.len(), axes.join(" x ")));
    Ok(())
}

fn simulate(common: &Common, margin: f64, blocks: u64, seeds: u64) -> Result<(), Failure> {
    if blocks < queuesim::MIN_BLOCKS {
        return Err(Error::Config(format!("--blocks {blocks} is below the minimum {}", queuesim::MIN_BLOCKS)).into());
    }
    if seeds == 0 {
        return Err(Error::Config("--seeds must be at least 1".into()).into());
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::Config(format!("--margin must lie in (0, 1), got {margin}")).into());
    }
    let cfg = ProblemConfig::from_toml(&read_config(&common.config)?)?.to_system()?;
    let capacity = effective_capacity(&cfg)?;
    let budget = ValidationBudget::new(blocks, (1..=seeds).collect());
    let report = queuesim::validate_rate(&cfg, &capacity, margin, &budget)?;
    let body = table::validation_table(&report)?;
    emit(common, &body)?;
    say(common, &verdict(&capacity, &report));
    if report.pass {
        Ok(())
    } else if report.insufficient_tail() {
        Err(Failure::InsufficientTail)
    } else {
        Err(Failure::Validation)
    }
}

fn verdict(capacity: &CapacityResult, rep: &ValidationReport) -> String {
    let mut s = format!(
        "case {}: R_E {:.6} bits/block\n  at {:.6}: {}/{} seeds meet both exponents\n  at {:.6}: {}/{} seeds miss one\n  need {} of {}: {}",
        capacity.case,
        rep.capacity,
        rep.lower_rate,
        rep.lower_passes,
        rep.lower.len(),
        rep.upper_rate,
        rep.upper_passes,
        rep.upper.len(),
        rep.required_seeds(),
        rep.lower.len(),
        if rep.pass { "PASS" } else { "FAIL" }
    );
    for n in &rep.notes {
        s += &format!("\n  note: {n}");
    }
    s
}
