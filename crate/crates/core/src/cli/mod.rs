//! Command-line front end of the `qet` binary.
//!
//! ```text
//! qet estimate [--config PATH] [--out DIR]
//! qet scan     [--config PATH] [--out DIR]
//! qet mc       [--config PATH] [--out DIR] [--seed N] [--shots N] [--arm qet|control]
//!              [--engine analytic|oracle|both] [--eta FLOAT]
//! qet check
//! ```
//!
//! Every subcommand accepts `--threads N`; without it the `QET_THREADS`
//! environment variable sets the worker count. Exit codes: 0 success,
//! 1 a failed check or experiment, 2 a configuration error. Errors are
//! written to standard error as a one-line JSON document.

pub mod check;
pub mod commands;
pub mod config;
pub mod output;

pub use check::{run_suites, suite_names, CheckContext, Fault, PropertyResult, SuiteResult};
pub use commands::{cmd_estimate, cmd_mc, cmd_scan, estimate_result, scan_csv, shots_csv, EstimateResult};
pub use config::{ExperimentSection, OutputSection, RunConfig, ScanSection};
pub use output::{write_atomic, Envelope, UnitConventions};

use crate::error::Error;
use crate::protocol::{Arm, Engine};
use clap::{Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "QET_THREADS";

/// Success.
pub const EXIT_OK: i32 = 0;
/// A check or experiment failed.
pub const EXIT_FAILURE: i32 = 1;
/// The configuration or command line is invalid.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qet", version, about = "Quantum energy teleportation on quantum-Hall edge channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Run file (TOML with unit-suffixed quantities).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed of the Monte-Carlo streams.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Number of Monte-Carlo shots.
    #[arg(long, global = true, value_name = "N")]
    shots: Option<usize>,
    /// Feedback arm.
    #[arg(long, global = true)]
    arm: Option<ArmArg>,
    /// Energy engine.
    #[arg(long, global = true)]
    engine: Option<EngineArg>,
    /// Coupling scale η in (0, 1].
    #[arg(long, global = true, value_name = "FLOAT")]
    eta: Option<f64>,
    /// Worker threads; overrides QET_THREADS.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Negative-control fault for `check`.
    #[arg(long, global = true, hide = true, value_name = "NAME")]
    inject_fault: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form quantities and the first-order E_B, as JSON.
    Estimate,
    /// E_B over a list of distances, as CSV with a JSON sidecar.
    Scan,
    /// Monte-Carlo experiment, as a JSON energy report.
    Mc,
    /// Run the invariant suites.
    Check,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ArmArg {
    Qet,
    Control,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Analytic,
    Oracle,
    Both,
}

fn error_exit(err: &Error) -> i32 {
    let doc = serde_json::json!({ "error": { "kind": err.kind(), "message": err.to_string() } });
    let _ = writeln!(std::io::stderr(), "{doc}");
    match err {
        Error::Config(_) | Error::InvalidInput(_) | Error::UnknownDimension(_) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn resolve(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &common.out {
        cfg.output.dir = d.clone();
    }
    let e = &mut cfg.experiment;
    if let Some(s) = common.seed {
        e.seed = s;
    }
    if let Some(n) = common.shots {
        e.shots = n;
    }
    if let Some(a) = common.arm {
        e.arm = match a {
            ArmArg::Qet => Arm::Qet,
            ArmArg::Control => Arm::Control,
        };
    }
    if let Some(en) = common.engine {
        e.engine = match en {
            EngineArg::Analytic => Engine::Analytic,
            EngineArg::Oracle => Engine::Oracle,
            EngineArg::Both => Engine::Both,
        };
    }
    if let Some(eta) = common.eta {
        e.eta = eta;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Worker count from the flag, else from [`THREADS_ENV`].
pub fn thread_count(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>, Error> {
    let n = match (flag, env) {
        (Some(n), _) => Some(n),
        (None, Some(s)) if !s.trim().is_empty() => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{THREADS_ENV} = `{s}` is not a thread count")))?,
        ),
        _ => None,
    };
    if n == Some(0) {
        return Err(Error::Config("thread count must be at least 1".into()));
    }
    Ok(n)
}

fn run_check(fault: Option<&str>) -> Result<i32, Error> {
    let fault = match fault {
        Some(name) => Some(Fault::parse(name).ok_or_else(|| Error::Config(format!("unknown fault `{name}`")))?),
        None => None,
    };
    let ctx = CheckContext::new(fault);
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    let mut total = 0.0;
    for suite in run_suites(&ctx) {
        total += suite.seconds;
        let status = if suite.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "[{status}] {} ({:.3} s)", suite.suite, suite.seconds);
        for p in &suite.properties {
            let mark = if p.passed { "ok  " } else { "FAIL" };
            let _ = writeln!(out, "    {mark} {}: {}", p.name, p.detail);
            if !p.passed {
                failed.push(p.name.clone());
            }
        }
    }
    if failed.is_empty() {
        let _ = writeln!(out, "all suites passed in {total:.1} s");
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(out, "failing properties: {}", failed.join(", "));
        Ok(EXIT_FAILURE)
    }
}

/// Run the program on `args` (including the program name) and return the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let env = std::env::var(THREADS_ENV).ok();
    match thread_count(cli.common.threads, env.as_deref()) {
        Ok(Some(n)) => {
            // a pool that already exists (repeated calls in one process) is kept
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(None) => {}
        Err(e) => return error_exit(&e),
    }
    if let Command::Check = cli.command {
        return run_check(cli.common.inject_fault.as_deref()).unwrap_or_else(|e| error_exit(&e));
    }
    let cfg = match resolve(&cli.common) {
        Ok(c) => c,
        Err(e) => return error_exit(&e),
    };
    let result = match cli.command {
        Command::Estimate => cmd_estimate(&cfg),
        Command::Scan => cmd_scan(&cfg),
        Command::Mc => cmd_mc(&cfg),
        Command::Check => unreachable!("handled above"),
    };
    match result {
        Ok(files) => {
            let mut out = std::io::stdout().lock();
            for f in files {
                let _ = writeln!(out, "{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => error_exit(&e),
    }
}
