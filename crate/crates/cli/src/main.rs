use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::{CliError, Outcome};

#[derive(Parser)]
#[command(name = "treecover", version, about = "Spanning tree covers, tree routing and distance oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic graph in the canonical text format.
    Generate {
        /// path | grid | random_geometric | star_exponential | uniform_line
        kind: String,
        size: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a tree cover and its stats.
    Cover {
        #[command(flatten)]
        run: RunArgs,
        /// Cover the greedy spanner instead of the graph.
        #[arg(long)]
        light: bool,
    },
    /// Check a cover file against its graph.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        cover: PathBuf,
    },
    /// Build the routing scheme and simulate routes.
    Route {
        #[command(flatten)]
        run: RunArgs,
        /// Per-vertex label and table dump (JSON).
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Answer distance/path queries from a file of `u v` lines.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        queries: PathBuf,
    },
}

#[derive(Args, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 6.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 24.0)]
    pub rho: f64,
    /// demand | exhaustive | theory
    #[arg(long, default_value = "demand")]
    pub mode: String,
    /// auto | all | sample:K | file:PATH
    #[arg(long, default_value = "auto")]
    pub pairs: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { kind, size, seed, out } => commands::generate(&kind, size, seed, out.as_deref()),
        Command::Cover { run, light } => commands::cover(&run, light),
        Command::Verify { run, cover } => commands::verify(&run, &cover),
        Command::Route { run, dump } => commands::route(&run, dump.as_deref()),
        Command::Oracle { run, cover, queries } => commands::oracle(&run, &cover, &queries),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail(why)) => {
            eprintln!("verification failed: {why}");
            ExitCode::from(1)
        }
        Err(e @ CliError::Failed(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
