//! `sok`: command-line driver for the SOK/SOH solvers.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::RunConfig;
use output::RunDir;

/// Invalid input: bad flags, bad configuration or inconsistent parameters.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser, Debug)]
#[command(name = "sok", version, about = "Self-organized kinetic and hydrodynamic solvers")]
struct Cli {
    /// TOML configuration file; command-line flags take precedence over it.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: output_dir from the config, then $SOK_OUTPUT_DIR, then ./sok-output].
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; bounds the number of per-epsilon runs in flight.
    #[arg(long, short, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate c1, c2, c3 over a range of noise values.
    Coeffs(commands::coeffs::Args),
    /// Solve the GCI problem for one noise value and write g and h.
    Gci(commands::gci::Args),
    /// Integrate the kinetic equation.
    RunSok(commands::sok::Args),
    /// Integrate the hydrodynamic system.
    RunSoh(commands::soh::Args),
    /// Hilbert-expansion remainder study over a list of epsilon.
    LimitStudy(commands::study::Args),
    /// Simulate the particle swarm.
    Particles(commands::particles::Args),
    /// Run the invariant suite.
    Check,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Coeffs(_) => "coeffs",
            Command::Gci(_) => "gci",
            Command::RunSok(_) => "run-sok",
            Command::RunSoh(_) => "run-soh",
            Command::LimitStudy(_) => "limit-study",
            Command::Particles(_) => "particles",
            Command::Check => "check",
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<sok_core::Error>() {
        Some(sok_core::Error::InvalidParameter { .. }) | Some(sok_core::Error::Parse(_)) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    let jobs = cli
        .jobs
        .map(usize::from)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let name = cli.command.name();
    let mut dir = RunDir::create(cfg.output_dir(cli.out.as_deref()).join(name))?;
    let result = pool.install(|| match &cli.command {
        Command::Coeffs(a) => commands::coeffs::run(&mut cfg, a, &mut dir),
        Command::Gci(a) => commands::gci::run(&mut cfg, a, &mut dir),
        Command::RunSok(a) => commands::sok::run(&mut cfg, a, &mut dir),
        Command::RunSoh(a) => commands::soh::run(&mut cfg, a, &mut dir),
        Command::LimitStudy(a) => commands::study::run(&mut cfg, a, &mut dir),
        Command::Particles(a) => commands::particles::run(&mut cfg, a, &mut dir),
        Command::Check => commands::check::run(&mut dir),
    });
    let echo = commands::config_echo(&cfg, name);
    let (code, msg) = match &result {
        Ok(c) => (*c, None),
        Err(e) => (exit_code(e), Some(format!("{e:#}"))),
    };
    dir.finish(name, echo, jobs, i32::from(code), msg)?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
