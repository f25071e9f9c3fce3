//! `fgps`: solve periodic fractional PDEs from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{FdmArgs, Sweep};
use config::{ConfigErrors, Overrides, RunConfig};

#[derive(Parser)]
#[command(version, about = "Fourier-Gegenbauer pseudospectral solver for periodic fractional PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem and write the solution on an evaluation grid
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the collocation matrix and right-hand side into this directory
        #[arg(long)]
        dump_system: Option<PathBuf>,
    },
    /// Build one fractional differentiation matrix and store it
    Fdm {
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Period; multiples of pi such as `2pi/3` are accepted
        #[arg(long, default_value = "2pi")]
        period: String,
        #[arg(long)]
        gamma: String,
        #[arg(long = "L", default_value = "30")]
        memory_len: String,
        #[arg(long, default_value_t = 1000)]
        ng: usize,
        #[arg(long, default_value = "0")]
        lambda: String,
        /// Output file
        #[arg(long, conflicts_with = "cache_dir")]
        out: Option<PathBuf>,
        /// Store under the cache name that `solve --cache-dir` looks for
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Solve once per value of a swept parameter and tabulate the errors
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        sweep: SweepArg,
        /// Comma-separated values
        #[arg(long, allow_hyphen_values = true)]
        values: Vec<String>,
    },
    /// Compare the differentiation matrix against direct quadrature
    OracleCheck {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    #[value(name = "n_g")]
    NG,
    #[value(name = "n1n2")]
    N1N2,
    #[value(name = "alpha-beta")]
    AlphaBeta,
}

impl From<SweepArg> for Sweep {
    fn from(s: SweepArg) -> Self {
        match s {
            SweepArg::NG => Sweep::NG,
            SweepArg::N1N2 => Sweep::N1N2,
            SweepArg::AlphaBeta => Sweep::AlphaBeta,
        }
    }
}

/// Run parameters; each overrides the same key in the config file.
#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in problem 1-4
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n1: Option<String>,
    #[arg(long)]
    n2: Option<String>,
    #[arg(long)]
    ng: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Memory length
    #[arg(long = "L", allow_hyphen_values = true)]
    memory_len: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Points per axis of the evaluation grid
    #[arg(long)]
    eval_grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for differentiation-matrix cache files
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl RunArgs {
    fn merged(&self) -> Result<Overrides, ConfigErrors> {
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        let path_str = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        Ok(file.overlay(Overrides {
            problem: self.problem.clone(),
            n1: self.n1.clone(),
            n2: self.n2.clone(),
            n_g: self.ng.clone(),
            lambda: self.lambda.clone(),
            memory_len: self.memory_len.clone(),
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            eval_grid: self.eval_grid.clone(),
            out: path_str(&self.out),
            cache_dir: path_str(&self.cache_dir),
        }))
    }

    fn config(&self) -> Result<RunConfig, ConfigErrors> {
        RunConfig::from_overrides(&self.merged()?)
    }
}

fn parse_field(field: &str, raw: &str) -> anyhow::Result<f64> {
    config::parse_real(raw)
        .filter(|v| v.is_finite())
        .ok_or_else(|| anyhow::anyhow!("invalid {field}: `{raw}` is not a finite number"))
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Solve { run, dump_system } => {
            commands::solve(&run.config()?, dump_system.as_deref())?;
        }
        Command::Fdm {
            n,
            period,
            gamma,
            memory_len,
            ng,
            lambda,
            out,
            cache_dir,
        } => {
            let args = FdmArgs {
                n,
                period: parse_field("period", &period)?,
                gamma: parse_field("gamma", &gamma)?,
                memory_len: parse_field("L", &memory_len)?,
                n_g: ng,
                lambda: parse_field("lambda", &lambda)?,
            };
            commands::fdm(&args, out.as_deref(), cache_dir.as_deref())?;
        }
        Command::Convergence { run, sweep, values } => {
            commands::convergence(&run.merged()?, sweep.into(), &values)?;
        }
        Command::OracleCheck { run } => return commands::oracle_check(&run.config()?),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
