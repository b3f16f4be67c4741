//! `lbkmap`: build latent voxel maps from observation frames, query them
//! against phrase dictionaries, quantify per-voxel uncertainty, and run
//! synthetic-scene evaluations.

mod commands;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Command-line errors split by exit code: 1 for usage problems, 2 for bad
/// or unreadable data.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }
}

impl<E> From<E> for CliError
where
    E: Into<anyhow::Error>,
{
    fn from(e: E) -> Self {
        Self::Data(e.into())
    }
}

pub type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "lbkmap",
    version,
    about = "Probabilistic voxel mapping over latent feature embeddings",
    propagate_version = true
)]
struct Cli {
    /// Configuration file (required by build, synth, and eval).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random choice a command makes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for map updates (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Chatty progress output on stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse observation frames into a map file.
    Build {
        /// Frame files, or a directory of .lbkf files; ingested in
        /// lexicographic filename order.
        #[arg(long, required = true, num_args = 1..)]
        frames: Vec<PathBuf>,
        /// Optional PCA transform applied to features before fusion.
        #[arg(long)]
        pca: Option<PathBuf>,
        /// Output map path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a map against a phrase dictionary.
    Query {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        /// PCA transform lifting reduced voxel features to dictionary space.
        #[arg(long)]
        pca: Option<PathBuf>,
        /// `category` (colored point cloud) or `heatmap:<phrase>` (per-voxel
        /// cosine scores).
        #[arg(long)]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-voxel uncertainty as CSV.
    Uncertainty {
        #[arg(long)]
        map: PathBuf,
        /// `sampling`, `e`, or `d`.
        #[arg(long)]
        method: String,
        /// Dictionary for decoded-space sampling (required for `sampling`).
        #[arg(long)]
        dict: Option<PathBuf>,
        #[arg(long)]
        pca: Option<PathBuf>,
        /// Posterior samples per voxel for `sampling`.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic labeled scene as frame files plus a dictionary.
    Synth {
        /// Output directory for frame_*.lbkf and dict.lbkd.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the evaluation experiments described by the config.
    Eval {
        /// Output directory for the metric and curve tables.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fit or apply a PCA feature compression.
    Pca {
        #[command(subcommand)]
        action: PcaAction,
    },
}

#[derive(Subcommand)]
enum PcaAction {
    /// Fit a transform on the features of a frame corpus.
    Fit {
        #[arg(long, required = true, num_args = 1..)]
        frames: Vec<PathBuf>,
        /// Reduced dimension.
        #[arg(long)]
        dims: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-encode frame files through a fitted transform.
    Apply {
        #[arg(long)]
        pca: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        frames: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();

    if cli.threads > 0 {
        // Ignored if a pool already exists (e.g. repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let config = cli.config.as_deref();
    let seed = cli.seed;
    match cli.command {
        Command::Build { frames, pca, out } => {
            commands::build::run(config, &frames, pca.as_deref(), &out)
        }
        Command::Query {
            map,
            dict,
            pca,
            mode,
            out,
        } => commands::query::run(&map, &dict, pca.as_deref(), &mode, &out),
        Command::Uncertainty {
            map,
            method,
            dict,
            pca,
            samples,
            out,
        } => commands::uncertainty::run(
            &map,
            &method,
            dict.as_deref(),
            pca.as_deref(),
            samples,
            seed,
            &out,
        ),
        Command::Synth { out_dir } => commands::synth::run(config, seed, &out_dir),
        Command::Eval { out_dir } => commands::eval::run(config, seed, &out_dir),
        Command::Pca { action } => match action {
            PcaAction::Fit { frames, dims, out } => commands::pca::fit(&frames, dims, &out),
            PcaAction::Apply {
                pca,
                frames,
                out_dir,
            } => commands::pca::apply(&pca, &frames, &out_dir),
        },
    }
}
