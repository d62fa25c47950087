//! `junction`: run the junction-flow pipeline from a TOML config.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 usage or config
//! error, 3 a solve did not converge.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use junction_flow::carrier::CarrierMode;
use junction_flow::config::{parse_str, RunSpec, ScheduleSpec};
use junction_flow::error::Error;

mod commands;

#[derive(Debug, Parser)]
#[command(name = "junction", version, about = "Steady Navier-Stokes on channel junctions")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, env = "JUNCTION_CONFIG", global = true)]
    config: Option<PathBuf>,
    /// Seed for the random test fields.
    #[arg(long, env = "JUNCTION_SEED", global = true)]
    seed: Option<u64>,
    /// Output directory; the config's `output.dir` otherwise.
    #[arg(long, env = "JUNCTION_OUT", global = true)]
    out: Option<PathBuf>,
    /// Cell size.
    #[arg(long, env = "JUNCTION_DELTA", global = true)]
    delta: Option<f64>,
    /// Carrier mode.
    #[arg(long, env = "JUNCTION_MODE", global = true, value_parser = ["hopf", "cp"])]
    mode: Option<String>,
    /// Truncations, `a+bk,K=n` or a comma list.
    #[arg(long, env = "JUNCTION_SCHEDULE", global = true)]
    schedule: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Couette-Poiseuille constants and discrete residuals of every outlet.
    Exact,
    /// Build and certify the flux carrier.
    Carrier {
        /// Cut-off parameter; overrides the config and skips calibration.
        #[arg(long)]
        eps: Option<f64>,
        /// Random test fields per outlet.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Solve on one truncation.
    Solve {
        /// Truncation length; the first scheduled one otherwise.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Solve on every scheduled truncation and fit the energy growth.
    Invade,
    /// Energy balance, asymptotics and uniqueness reports.
    Diagnose,
    /// Every property check the config enables.
    Verify,
}

/// Why a run stopped.
pub enum Failure {
    Usage(String),
    Checks(usize),
    Solver(Error),
    Other(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } => Failure::Solver(e),
            Error::ParseError { .. } | Error::ValidationError { .. } => Failure::Usage(e.to_string()),
            e => Failure::Other(e),
        }
    }
}

/// Spec after the command-line overrides, and where its artifacts go.
pub struct Loaded {
    pub spec: RunSpec,
    pub out: PathBuf,
}

fn load(cli: &Cli) -> Result<Loaded, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Usage("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut spec = parse_str(&text)?;
    if let Some(d) = cli.delta {
        spec.delta = d;
    }
    if let Some(s) = cli.seed {
        spec.carrier.seed = Some(s);
    }
    if let Some(m) = &cli.mode {
        spec.carrier.mode = CarrierMode::parse(m).ok_or_else(|| Failure::Usage(format!("unknown mode {m}")))?;
        // Sampling only applies to hopf carriers.
        if spec.carrier.mode == CarrierMode::Cp {
            spec.carrier.samples = 0;
        }
    }
    if let Some(s) = &cli.schedule {
        spec.schedule = ScheduleSpec { formula: Some(s.clone()), times: None };
    }
    if let Command::Carrier { eps, samples } = &cli.command {
        if eps.is_some() {
            spec.carrier.eps = *eps;
        }
        if let Some(n) = samples {
            spec.carrier.samples = *n;
        }
    }
    let errs = spec.validation_errors();
    if !errs.is_empty() {
        let all: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        return Err(Failure::Usage(all.join("\n")));
    }
    let out = cli.out.clone().unwrap_or_else(|| spec.output.dir.clone());
    Ok(Loaded { spec, out })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = load(&cli).and_then(|run| match cli.command {
        Command::Exact => commands::exact(&run),
        Command::Carrier { .. } => commands::carrier(&run),
        Command::Solve { t } => commands::solve(&run, t),
        Command::Invade => commands::invade(&run),
        Command::Diagnose => commands::diagnose(&run),
        Command::Verify => commands::verify(&run),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Checks(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
