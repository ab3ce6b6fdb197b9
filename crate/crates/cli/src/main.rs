//! Command-line front end for the nanowire pipeline: band sweeps, entropy
//! tables, quantum process tomography, basis-size convergence and the
//! eigenstate cache.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod cache;
mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use topowire::spectrum::TopoBranch;

use commands::entropy_cmd::Which;
use commands::qpt_cmd::{QptArgs, QptCase};
use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    fn numeric(msg: impl fmt::Display) -> Self {
        CliError::Numeric(msg.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "topowire", version, about = "Bi2Se3 nanowire band structure, entropies and process tomography")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (KEY=VALUE lines or JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Override the RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the sector radii list (Å), comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    rc: Option<Vec<f64>>,
    /// Override the number of Kraus operators
    #[arg(long, global = true)]
    nk: Option<usize>,
    /// Override the optimizer tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// L1 regularization strength
    #[arg(long, global = true)]
    lambda: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Band sweep over the (L, k_z) grid; writes bands.csv + gap_window.csv
    Bands,
    /// Entropy tables; writes topo.csv / md.csv + spectrum dumps
    Entropy {
        #[arg(long, value_enum, default_value_t = WhichArg::Both)]
        which: WhichArg,
    },
    /// Learn the Kraus process for sector or mode-dependent targets
    Qpt {
        #[arg(long, value_enum, default_value_t = CaseArg::Abc)]
        case: CaseArg,
        #[arg(long, value_enum, default_value_t = BranchArg::Upper)]
        branch: BranchArg,
        /// Target k_z values (defaults to a plateau sample)
        #[arg(long, value_delimiter = ',')]
        kz: Option<Vec<f64>>,
        /// Angular momentum channel
        #[arg(long, default_value_t = 0)]
        l: u32,
    },
    /// Basis-size convergence of one topological branch
    Convergence {
        #[arg(long, default_value_t = 0)]
        l: u32,
        #[arg(long, default_value_t = 0.1)]
        kz: f64,
        /// Basis sizes, comma separated
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = BranchArg::Upper)]
        branch: BranchArg,
    },
    /// Inspect or clear the eigenstate cache
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// List entries; --verify recomputes residuals for the active config
    Inspect {
        #[arg(long)]
        verify: bool,
    },
    /// Remove every cache entry
    Clear,
}

#[derive(Clone, Copy, ValueEnum, Debug)]
enum WhichArg {
    Topo,
    Md,
    Both,
}

#[derive(Clone, Copy, ValueEnum, Debug)]
enum CaseArg {
    Abc,
    Md,
}

#[derive(Clone, Copy, ValueEnum, Debug)]
enum BranchArg {
    Upper,
    Lower,
}

impl From<BranchArg> for TopoBranch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Upper => TopoBranch::Upper,
            BranchArg::Lower => TopoBranch::Lower,
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(CliError::config)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(rc) = &common.rc {
        cfg.rc_list = rc.clone();
    }
    if common.nk.is_some() {
        cfg.n_k = common.nk;
    }
    if common.tol.is_some() {
        cfg.tol = common.tol;
    }
    if let Some(lambda) = common.lambda {
        cfg.lambda = lambda;
    }
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.common.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.workers)
            .build_global()
            .map_err(CliError::config)?;
    }
    let cfg = load_config(&cli.common)?;
    let out_dir = cli.common.out.clone();
    let cache_root = cache::cache_root(&out_dir);
    match &cli.command {
        Command::Bands => commands::bands::run(&cfg, &out_dir, &cache_root),
        Command::Entropy { which } => {
            let which = match which {
                WhichArg::Topo => Which::Topo,
                WhichArg::Md => Which::Md,
                WhichArg::Both => Which::Both,
            };
            commands::entropy_cmd::run(&cfg, &out_dir, &cache_root, which)
        }
        Command::Qpt { case, branch, kz, l } => {
            let case = match case {
                CaseArg::Abc => QptCase::Abc,
                CaseArg::Md => QptCase::Md,
            };
            let kz_list = kz
                .clone()
                .unwrap_or_else(|| vec![0.04, 0.06, 0.08, 0.10, 0.12]);
            let args = QptArgs { case, branch: (*branch).into(), kz_list, l: *l };
            commands::qpt_cmd::run(&cfg, &out_dir, &cache_root, &args)
        }
        Command::Convergence { l, kz, sizes, branch } => {
            let sizes = sizes
                .clone()
                .unwrap_or_else(|| (20..=64).step_by(4).collect());
            commands::convergence::run(&cfg, &out_dir, *l, *kz, &sizes, (*branch).into())
        }
        Command::Cache { action } => match action {
            CacheAction::Inspect { verify } => {
                commands::cache_cmd::inspect(&cfg, &cache_root, *verify)
            }
            CacheAction::Clear => commands::cache_cmd::clear(&cache_root),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e @ CliError::Numeric(_)) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}
