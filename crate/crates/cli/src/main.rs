use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::{cmd_poisson, cmd_series, cmd_sweep, cmd_verify, CliError};
use config::{ConfigError, RunConfig};
use output::Table;

#[derive(Parser, Debug)]
#[command(name = "abprop", version, about = "Propagator checks and sweeps for a charged particle on a ring around a flux line")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Table format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run only this verification suite.
    #[arg(long, global = true)]
    suite: Option<String>,

    /// VAR:MIN:MAX:STEPS[:log] with VAR one of phi, t, p0, p1, eps, alpha.
    #[arg(long, global = true)]
    sweep: Option<String>,

    /// Measure file, one `beta weight_re weight_im` atom per line.
    #[arg(long, global = true)]
    measure: Option<PathBuf>,

    /// Override any configuration key, e.g. `--set p0=2`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run the verification suites and print a pass/fail table.
    Verify,
    /// Sweep one parameter and tabulate the propagator phase.
    Sweep,
    /// Tabulate perturbation-series partial sums against the closed form.
    Series,
    /// Tabulate both sides of the Gaussian-smoothed Poisson summation.
    PoissonDemo,
}

fn build_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError::new("set", format!("expected KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(f) = &cli.format {
        cfg.set("format", f)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(s) = &cli.sweep {
        cfg.set("sweep", s)?;
    }
    if let Some(m) = &cli.measure {
        cfg.measure = Some(m.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(table: &Table, cfg: &RunConfig, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(cfg.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write(cfg.format, &mut lock)?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = build_config(cli)?;
    match cli.command {
        Command::Verify => {
            let stdout = io::stdout();
            let (table, ok) = cmd_verify(&cfg, cli.suite.as_deref(), &mut stdout.lock())?;
            if cli.out.is_some() {
                emit(&table, &cfg, &cli.out)?;
            }
            Ok(ok)
        }
        Command::Sweep => emit(&cmd_sweep(&cfg)?, &cfg, &cli.out).map(|_| true),
        Command::Series => emit(&cmd_series(&cfg)?, &cfg, &cli.out).map(|_| true),
        Command::PoissonDemo => emit(&cmd_poisson(&cfg)?, &cfg, &cli.out).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
