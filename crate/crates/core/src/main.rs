use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nptorus::cli::{self, Command, Overrides, RunConfig, CACHE_ENV};
use nptorus::modes::RangeMethod;

#[derive(Parser)]
#[command(name = "nptorus", version, about = "Neumann-Poincare spectrum of tori, mode by mode")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Sub {
    /// Check the toroidal closed forms against Cartesian evaluation
    GeometryCheck,
    /// Tabulate the numerical range I_{k,l} with its ingredients
    Numrange,
    /// Eigenvalues of the truncated mode operators
    Spectrum,
    /// Sign certificates and leading-term ratios along both axes
    Asymptotics,
    /// Extremal eigenvalues under increasing truncation
    Convergence,
}

#[derive(Args)]
struct Flags {
    /// Shape parameter; repeat for a sweep
    #[arg(long, global = true, action = clap::ArgAction::Append)]
    xi: Vec<f64>,
    #[arg(long = "kmax", global = true)]
    k_max: Option<usize>,
    #[arg(long = "lmax", global = true)]
    l_max: Option<usize>,
    /// Galerkin truncation: modes -L..=L
    #[arg(long = "L", global = true)]
    l_trunc: Option<usize>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long = "out", global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long = "cache", global = true)]
    cache_dir: Option<PathBuf>,
    /// spectral, direct, polar or all
    #[arg(long, global = true)]
    method: Option<RangeMethod>,
    /// key = value file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let f = args.flags;
    let base = match &f.config {
        Some(path) => RunConfig::from_file(path),
        None => Ok(RunConfig::default()),
    };
    let overrides = Overrides {
        xi: f.xi,
        k_max: f.k_max,
        l_max: f.l_max,
        l_trunc: f.l_trunc,
        rel_tol: f.rel_tol,
        abs_tol: f.abs_tol,
        jobs: f.jobs,
        out_dir: f.out_dir,
        cache_dir: f.cache_dir,
        method: f.method,
    };
    let env_cache = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    let config = match base.and_then(|b| b.resolve(overrides, env_cache)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let command = match args.command {
        Sub::GeometryCheck => Command::GeometryCheck,
        Sub::Numrange => Command::Numrange,
        Sub::Spectrum => Command::Spectrum,
        Sub::Asymptotics => Command::Asymptotics,
        Sub::Convergence => Command::Convergence,
    };
    ExitCode::from(cli::run(command, &config) as u8)
}
