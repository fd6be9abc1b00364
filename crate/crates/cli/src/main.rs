use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod fail;
mod sweep;

use config::Config;
use fail::Fail;

/// Multi-access coded caching: rate tables, delivery plans, sweeps and
/// exact oracles.
#[derive(Parser, Debug)]
#[command(name = "macc-lab", version, about)]
struct Cli {
    /// JSON file whose keys mirror the flags; flags win on conflict
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Extension degree w of the coding field GF(2^w); overrides MACC_LAB_FIELD_W
    #[arg(long, global = true)]
    field_w: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print every rate calculator at one corner point
    Rates(RatesArgs),
    /// Assemble and verify a delivery plan, emitting it as JSON
    Plan(PlanArgs),
    /// Assemble and verify plans over ranges of K and L, writing CSV
    Sweep(SweepArgs),
    /// Run the exact searches on a small instance
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct CornerArgs {
    /// Number of caches and users
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Consecutive caches each user reads
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Memory index; each cache stores i/K of every file
    #[arg(long)]
    pub i: Option<usize>,
    /// Number of files (default K)
    #[arg(long = "N")]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RatesArgs {
    #[command(flatten)]
    pub corner: CornerArgs,
    /// Also report memory-shared rates at this normalized memory (e.g. 3 or 5/2)
    #[arg(long = "M")]
    pub m: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[command(flatten)]
    pub corner: CornerArgs,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Color count for divisor mode; must divide K and be at least K-iL+1
    #[arg(long)]
    pub x: Option<usize>,
    /// Comma-separated 1-based file index per user (default: all distinct)
    #[arg(long)]
    pub demands: Option<String>,
    /// Write the plan JSON here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Inclusive range of K, written a..b, a-b or a single value
    #[arg(long = "K-range")]
    pub k_range: Option<String>,
    /// Inclusive range of L (default 1..K); values above K are skipped
    #[arg(long = "L-range")]
    pub l_range: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Write CSV here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Refuse sweeps with more (K, L, i) tuples than this
    #[arg(long)]
    pub max_tuples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub corner: CornerArgs,
    #[arg(long)]
    pub demands: Option<String>,
    /// Only the 1-based column pair of the reduction table
    #[arg(long, conflicts_with_all = ["icp", "union"])]
    pub pair: Option<usize>,
    /// A union instance given as a1,a2,z
    #[arg(long, conflicts_with = "icp")]
    pub union: Option<String>,
    /// A generic instance in JSON
    #[arg(long)]
    pub icp: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub which: Option<Which>,
    /// Largest color count tried by the local chromatic search
    #[arg(long)]
    pub max_colors: Option<usize>,
    #[arg(long)]
    pub chi_cap: Option<usize>,
    #[arg(long)]
    pub mais_cap: Option<usize>,
    #[arg(long)]
    pub min_rank_cap: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Linear,
    Quadratic,
    Divisor,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    All,
    Chi,
    Mais,
    MinRank,
}

fn run(cli: Cli) -> Result<(), Fail> {
    let cfg = Config::load(cli.config.as_deref())?;
    let field_w = commands::field_degree(cli.field_w, &cfg)?;
    match cli.command {
        Command::Rates(a) => commands::rates(a, &cfg),
        Command::Plan(a) => commands::plan(a, &cfg, field_w),
        Command::Sweep(a) => sweep::run(a, &cfg, field_w),
        Command::Oracle(a) => commands::oracle(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("macc-lab: {f}");
            ExitCode::from(f.code())
        }
    }
}
