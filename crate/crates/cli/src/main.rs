use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use wignerlab::config::{parse_scenario, RunConfig, SweepConfig};
use wignerlab::diagnostics::Breakdown;
use wignerlab::experiment;
use wignerlab::Error;

/// Wigner-function phase-space experiments.
#[derive(Parser)]
#[command(name = "wignerlab", version)]
struct Cli {
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write its trajectory CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Paired quantum/classical run with breakdown detection.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Parameter sweep with a scaling fit.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Number of members evolved concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Recurrence-time estimate for a macroscopic scenario.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render a stored snapshot as a 16-bit PGM heatmap.
    SnapshotToPgm {
        /// Snapshot base path or its .bin/.json file.
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. }
        | Error::Parse(_)
        | Error::DomainTooSmall(_)
        | Error::Unphysical(_)
        | Error::UnsupportedModel(_) => EXIT_CONFIG,
        Error::NumericAbort { .. } | Error::Resolution(_) => EXIT_NUMERIC,
        _ => EXIT_FAILURE,
    }
}

fn read_config(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn describe(b: &Breakdown) -> String {
    match b {
        Breakdown::Reached { t } => format!("t = {t}"),
        Breakdown::NotReached { max_time } => format!("not reached (t <= {max_time})"),
    }
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run { config, out } => {
            let text = read_config(&config)?;
            let cfg = RunConfig::parse(&text)?;
            let r = experiment::run(&cfg, &text, &out)?;
            let last = r.evolution.record.last().expect("record holds the initial sample");
            println!("wrote {}", r.csv.display());
            println!("t = {}  purity = {}  norm = {}", last.t, last.purity, last.moments.norm);
        }
        Command::Compare { config, out } => {
            let text = read_config(&config)?;
            let cfg = RunConfig::parse(&text)?;
            let r = experiment::compare(&cfg, &text, &out)?;
            println!(
                "moment breakdown (threshold {}): {}",
                r.breakdown.moment_threshold,
                describe(&r.breakdown.moment)
            );
            if let Some(c) = &r.breakdown.correction {
                println!("correction breakdown (threshold {}): {}", r.breakdown.correction_threshold, describe(c));
            }
        }
        Command::Sweep { config, out, parallel } => {
            let text = read_config(&config)?;
            let cfg = SweepConfig::parse(&text)?;
            let r = experiment::sweep(&cfg, &text, &out, parallel)?;
            print!("{}", experiment::summary_csv(&r));
            if let Some(l) = &r.lyapunov {
                println!(
                    "lyapunov rate {} +- {}{}",
                    l.rate,
                    l.stderr,
                    if l.low_confidence { " (low confidence)" } else { "" }
                );
            }
            for f in &r.fits {
                println!(
                    "{}: slope {} +- {} (expected {}), R^2 {}",
                    f.description, f.fit.slope, f.fit.slope_stderr, f.expected_slope, f.fit.r_squared
                );
            }
            for n in &r.notes {
                println!("note: {n}");
            }
            if r.failures() > 0 {
                eprintln!(
                    "{} of {} members failed; see {}",
                    r.failures(),
                    r.members.len(),
                    out.join("failures.csv").display()
                );
                return Ok(EXIT_PARTIAL);
            }
        }
        Command::Estimate { config, out } => {
            let text = read_config(&config)?;
            let sc = parse_scenario(&text)?;
            print!("{}", experiment::estimate(&sc, &text, &out)?);
        }
        Command::SnapshotToPgm { input, out } => {
            let t = experiment::snapshot_to_pgm(&input, &out)?;
            println!("wrote {} (t = {t})", out.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
