//! Command-line interface.
//!
//! Exit codes: 0 = the experiment ran to completion (the verdict itself,
//! pass or fail, lives in the payload); 2 = configuration error; 3 = the
//! run hit a structural incapacity (undefined at the configured depth, or
//! an exhausted scan budget).

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_config, ExperimentConfig};
use crate::error::Error;
use crate::report::canonical_value;
use crate::runner::{paper_suite, run_experiment, suite_to_json};

#[derive(Debug, Parser)]
#[command(
    name = "sensdyn",
    about = "Exact sensitivity and entropy experiments on measurable dynamical systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check restricted sensitivity over sampled centers and radii.
    CheckRs(RunArgs),
    /// Check restricted pairwise sensitivity over sampled pairs.
    CheckRps(RunArgs),
    /// Construct and verify a sensitivity failure witness.
    Witness(RunArgs),
    /// Estimate measure-theoretic entropy.
    Entropy(RunArgs),
    /// Estimate the minimal asymptotic rate along a sampled orbit.
    Rate(RunArgs),
    /// Cross-check a pairwise-sensitivity verdict against an entropy bound.
    BoundCheck(RunArgs),
    /// Run the bundled reproduction suite.
    PaperSuite(SuiteArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    /// Suite seed; every entry derives its own stream from it.
    #[arg(long, default_value_t = 1234)]
    seed: u64,
    /// Write the canonical suite JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Which experiment kinds each subcommand accepts.
fn allowed_kinds(cmd: &Cmd) -> &'static [&'static str] {
    match cmd {
        Cmd::CheckRs(_) => &["check-rs"],
        Cmd::CheckRps(_) => &["check-rps"],
        Cmd::Witness(_) => &["witness-rps-failure", "witness-rankone-failure"],
        Cmd::Entropy(_) => &["entropy"],
        Cmd::Rate(_) => &["rate"],
        Cmd::BoundCheck(_) => &["bound-check"],
        Cmd::PaperSuite(_) => &[],
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::UndefinedAtDepth { .. } | Error::BudgetExceeded(_) => 3,
        _ => 2,
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| {
                    if text.ends_with('\n') {
                        Ok(())
                    } else {
                        stdout.write_all(b"\n")
                    }
                })
                .map_err(|e| Error::Config(format!("cannot write stdout: {e}")))
        }
    }
}

fn load_config(args: &RunArgs, cmd_kinds: &[&str]) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let kind = cfg.experiment.kind();
    if !cmd_kinds.contains(&kind) {
        return Err(Error::Config(format!(
            "config declares experiment `{kind}`, but this subcommand accepts: {}",
            cmd_kinds.join(", ")
        )));
    }
    Ok(cfg)
}

fn run_one(args: &RunArgs, cmd_kinds: &[&str]) -> Result<(), Error> {
    let cfg = load_config(args, cmd_kinds)?;
    let started = Instant::now();
    let payload = run_experiment(&cfg)?;
    let wall_time_ms = started.elapsed().as_millis() as u64;
    match args.format {
        Format::Csv => emit(&args.out, &payload.to_csv()),
        Format::Json => {
            let doc = serde_json::json!({
                "config": canonical_value(&cfg)?,
                "experiment": cfg.experiment.kind(),
                "payload": payload.to_json()?,
                "wall_time_ms": wall_time_ms,
            });
            let text = serde_json::to_string_pretty(&doc)
                .map_err(|e| Error::Config(e.to_string()))?;
            emit(&args.out, &text)
        }
    }
}

fn run_suite(args: &SuiteArgs) -> Result<(), Error> {
    let entries = paper_suite(args.seed)?;
    let mut ok_count = 0usize;
    eprintln!("{:<32} {:<24} {:<6} summary", "entry", "experiment", "ok");
    for e in &entries {
        if e.ok {
            ok_count += 1;
        }
        eprintln!(
            "{:<32} {:<24} {:<6} {}",
            e.name,
            e.experiment,
            if e.ok { "ok" } else { "FAIL" },
            e.summary
        );
    }
    eprintln!("{ok_count}/{} entries ok", entries.len());
    let text = suite_to_json(args.seed, &entries)?;
    emit(&args.out, &text)
}

/// Parse arguments from the process environment, run, and return the exit
/// code. Errors are printed to stderr.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let kinds = allowed_kinds(&cli.cmd);
    let result = match &cli.cmd {
        Cmd::PaperSuite(args) => run_suite(args),
        Cmd::CheckRs(args)
        | Cmd::CheckRps(args)
        | Cmd::Witness(args)
        | Cmd::Entropy(args)
        | Cmd::Rate(args)
        | Cmd::BoundCheck(args) => run_one(args, kinds),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
