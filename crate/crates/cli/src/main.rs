use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::Context;
use config::Config;

#[derive(Parser)]
#[command(name = "modelset", version, about = "Model sets, pattern-equivariant operators and periodic approximants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random choice (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Patch radius (overrides `radius`; the reference radius for `converge`).
    #[arg(long, global = true)]
    radius: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Enumerate a model-set patch; write patch.json, gaps.csv, classes.csv.
    Generate,
    /// Density of states; write dos_atoms.csv, ids.csv, dos_summary.json.
    Dos,
    /// Autocorrelation; write autocorr_atoms.csv and autocorr_pairs.csv.
    Autocorr,
    /// Double-limit convergence experiment; write convergence.json and grids.
    Converge,
    /// Randomized kernel-algebra invariant suite; write algebra_check.json.
    AlgebraCheck,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Assertion(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Assertion(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
        }
    }
}

impl From<modelset::Error> for CliError {
    fn from(e: modelset::Error) -> Self {
        use modelset::Error as E;
        match e {
            E::Numerical(_) | E::NotHermitian(_) | E::ZeroMass | E::TooLarge(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = Config::load(path)?;
    if let Some(r) = cli.radius {
        cfg.radius = Some(r);
    }
    let ctx = Context {
        out: cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
    };
    commands::ensure_dir(&ctx.out)?;
    match cli.command {
        Command::Generate => commands::generate(&cfg, &ctx),
        Command::Dos => commands::dos(&cfg, &ctx),
        Command::Autocorr => commands::autocorr(&cfg, &ctx),
        Command::Converge => commands::converge(&cfg, &ctx, cli.seed, cli.radius),
        Command::AlgebraCheck => commands::algebra_check(&cfg, &ctx, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("configuration error: --threads must be positive");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
