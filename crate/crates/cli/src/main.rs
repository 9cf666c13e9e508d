//! `eccforge`: evolve elliptic-curve domain parameters, validate them, serve
//! and replay the order-processing simulation, attack it, and compare the
//! two optimizers.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "eccforge", version, about = "Evolutionary elliptic-curve parameter search with a simulated secure order pipeline")]
struct Cli {
    /// Output directory for every artifact (params files, histories,
    /// manifests). Falls back to $ECCFORGE_OUT, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Caps evaluation parallelism; for `attack` this is the walker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Ga,
    Pso,
}

#[derive(Args, Clone)]
struct OptimizeFlags {
    /// Prime size in bits.
    #[arg(long)]
    bits: Option<u32>,
    /// Population (GA) or swarm (PSO) size.
    #[arg(long, alias = "swarm-size")]
    pop_size: Option<usize>,
    /// Generations (GA) or iterations (PSO).
    #[arg(long, alias = "iterations")]
    generations: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Small desk-scale preset: 16 bits, population 20, 10 generations.
    #[arg(long)]
    budget_small: bool,
    /// Replace wall-clock probe timing with budget fractions so repeated
    /// runs are byte-identical.
    #[arg(long)]
    deterministic_timing: bool,

    // Genetic operator rates.
    #[arg(long)]
    cxpb: Option<f64>,
    #[arg(long)]
    mutpb: Option<f64>,
    #[arg(long)]
    indpb: Option<f64>,
    #[arg(long)]
    multiparent_cxpb: Option<f64>,
    #[arg(long)]
    elitism_rate: Option<f64>,
    #[arg(long)]
    tournament_size: Option<usize>,

    // Swarm coefficients.
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    w_max: Option<f64>,
    #[arg(long)]
    w_min: Option<f64>,
    #[arg(long)]
    stall_limit: Option<u32>,

    // Resistance probe.
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    probe_iterations: Option<u32>,
    #[arg(long)]
    distinguished_bits: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer and write its parameter file and fitness history.
    Optimize {
        #[arg(value_enum)]
        algorithm: Algorithm,
        #[command(flatten)]
        flags: OptimizeFlags,
    },
    /// Check a parameter file against the full validation chain.
    Validate { params_file: PathBuf },
    /// Start the ERP-side server (Entity B).
    Serve {
        /// Parameter source: ga | pso | secp256k1 | brainpoolP256r1 | a path.
        #[arg(long, default_value = "secp256k1")]
        curve: String,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replay the orders dataset against a running server (Entity A).
    Replay {
        #[arg(long)]
        server: String,
        /// Orders CSV; the bundled dataset when omitted.
        #[arg(long)]
        orders: Option<PathBuf>,
        /// Run length in seconds.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        /// Pause between orders in seconds.
        #[arg(long, default_value_t = 0.5)]
        interval: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the discrete-log attacker against a server's public key.
    Attack {
        #[arg(long)]
        server: String,
        #[arg(long, default_value_t = 1_000_000)]
        step_budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run both optimizers at matched budgets and report the comparison.
    Compare {
        #[command(flatten)]
        flags: OptimizeFlags,
    },
}

/// Failures are split by exit code: usage/parse problems exit 2, domain
/// failures exit 1.
pub(crate) enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => m,
        }
    }
}

fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("ECCFORGE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("./out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        eccforge_core::set_worker_threads(workers.max(1));
    }
    let out_dir = resolve_out_dir(cli.out);
    let result = match cli.command {
        Command::Optimize { algorithm, flags } => {
            commands::optimize(algorithm, &flags, &out_dir)
        }
        Command::Validate { params_file } => commands::validate(&params_file, &out_dir),
        Command::Serve { curve, bind, seed } => {
            commands::serve(&curve, &bind, seed, cli.workers.unwrap_or(2), &out_dir)
        }
        Command::Replay {
            server,
            orders,
            duration,
            interval,
            seed,
        } => commands::replay(&server, orders, duration, interval, seed, &out_dir),
        Command::Attack {
            server,
            step_budget,
            seed,
        } => commands::attack(&server, cli.workers.unwrap_or(4), step_budget, seed, &out_dir),
        Command::Compare { flags } => commands::compare(&flags, &out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}
