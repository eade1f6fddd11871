//! The `qrecur` command line: time scales, spectra, wave-packet traces and
//! parameter sweeps for a single nonlinear resonance.

mod commands;
mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use qrecur::{Error, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "qrecur", version, about = "Recurrence times near a nonlinear resonance")]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `out` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for `sweep`.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Mathieu convergence tolerance; overrides `tol` from the config.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,

    /// Extra `KEY=VALUE` override, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form and numeric time scales side by side.
    Times,
    /// Quasi-energy spectrum as CSV.
    Spectrum,
    /// Propagate the packet, write the trace and the recurrence report.
    Evolve,
    /// Time scales over a grid of one or two parameters.
    Sweep,
    /// Run the built-in invariant checks.
    Verify {
        /// Restrict to one module's checks.
        #[arg(long, value_name = "MODULE")]
        only: Option<String>,
    },
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(std::io::Error),
    /// `verify` found this many failing checks.
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Core(e) => error_exit_code(e),
            Self::Io(_) => 1,
            Self::Checks(_) => 3,
        }
    }
}

/// 2: bad input, 3: numerical quality, 4: unresolved analysis.
pub fn error_exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::InvalidParameter(_)
        | Error::UnsupportedRegime(_)
        | Error::InputShape(_)
        | Error::Range(_) => 2,
        Error::Unresolved(_) => 4,
        Error::NumericalQuality { .. }
        | Error::BranchDegeneracy { .. }
        | Error::Resource(_)
        | Error::BasisSize { .. }
        | Error::Stencil { .. } => 3,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::new(),
    };
    for item in &cli.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{item}'")))?;
        cfg.set(k, v)?;
    }
    if let Some(tol) = cli.tol {
        cfg.numeric.tol = tol;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let workers = match cli.workers {
        Some(0) => return Err(Error::Config("--workers must be at least 1".into()).into()),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    match &cli.command {
        Command::Times => commands::times(&cfg),
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Evolve => commands::evolve(&cfg),
        Command::Sweep => commands::sweep(&cfg, workers),
        Command::Verify { only } => verify::run(&cfg, cli.config.is_some(), only.as_deref()),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("qrecur: {e}"),
                Failure::Io(e) => eprintln!("qrecur: i/o error: {e}"),
                Failure::Checks(n) => eprintln!("qrecur: {n} check(s) failed"),
            }
            f.exit_code()
        }
    }
}
