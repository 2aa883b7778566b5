//! The `quicci` command line: dataset generation, indexing, retrieval and
//! the evaluation reports, each run writing a manifest of its effective
//! parameters and input hashes.

pub mod commands;
pub mod error;
pub mod files;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::{CliError, Result};
use quicci_core::datagen::DEFAULT_VIEW_DISTANCE;
use quicci_core::descriptor::DescriptorParams;
use quicci_core::index::DEFAULT_LEAF_THRESHOLD;
use quicci_core::pipeline::DEFAULT_VOTE_THRESHOLD;

#[derive(Debug, Parser)]
#[command(name = "quicci", version, about = "Partial 3D object retrieval with QUICCI descriptors")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct DescriptorArgs {
    /// Descriptor side length in bits.
    #[arg(long, default_value_t = 64, value_parser = parse_resolution)]
    pub resolution: u8,
    /// Radius of the largest circle, in model units.
    #[arg(long, default_value_t = 100.0)]
    pub support_radius: f64,
}

impl DescriptorArgs {
    pub fn params(&self, delta_threshold: u8) -> Result<DescriptorParams> {
        Ok(DescriptorParams::new(self.resolution, self.support_radius, delta_threshold)?)
    }
}

fn parse_resolution(s: &str) -> std::result::Result<u8, String> {
    match s {
        "16" => Ok(16),
        "32" => Ok(32),
        "64" => Ok(64),
        _ => Err(format!("resolution must be 16, 32 or 64, got {s}")),
    }
}

fn parse_delta(s: &str) -> std::result::Result<u8, String> {
    match s {
        "1" => Ok(1),
        "2" => Ok(2),
        _ => Err(format!("delta threshold must be 1 or 2, got {s}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Voting,
    Exhaustive,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic vessel meshes as OBJ files.
    GenSynthetic {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cut one partial view from a random viewpoint out of every mesh.
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Camera distance from the bounding-sphere center, in bounding radii.
        #[arg(long, default_value_t = DEFAULT_VIEW_DISTANCE)]
        view_distance: f64,
    },
    /// Index every vertex descriptor of the meshes in a directory.
    BuildIndex {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        descriptor: DescriptorArgs,
        #[arg(long, default_value_t = DEFAULT_LEAF_THRESHOLD)]
        leaf_threshold: usize,
        /// Store product (AND) images for a tighter bound.
        #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true")]
        product_images: bool,
    },
    /// Retrieve the best-matching indexed object for a partial mesh.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VOTE_THRESHOLD)]
        vote_threshold: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        max_matches: usize,
        #[arg(long)]
        json_out: PathBuf,
        #[arg(long)]
        log_out: PathBuf,
    },
    /// Fraction of query meshes whose best match is their source object.
    EvalNn {
        #[arg(long)]
        index: PathBuf,
        /// Directory of query meshes named after their source objects.
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, value_enum)]
        mode: EvalMode,
        /// Delta threshold for query descriptors.
        #[arg(long, default_value_t = 2, value_parser = parse_delta)]
        delta_threshold: u8,
        #[arg(long, default_value_t = DEFAULT_VOTE_THRESHOLD)]
        vote_threshold: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        csv_out: PathBuf,
    },
    /// Time tree queries against a sequential scan.
    BenchIndex {
        #[arg(long)]
        index: PathBuf,
        /// Descriptor dump with the query descriptors.
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-bit occurrence counts of a descriptor dump.
    Heatmap {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        pgm_out: PathBuf,
        #[arg(long)]
        csv_out: PathBuf,
    },
    /// Undesirable-bit and overlap histograms of partial views.
    BitReport {
        #[arg(long)]
        complete: PathBuf,
        #[arg(long)]
        partial: PathBuf,
        #[command(flatten)]
        descriptor: DescriptorArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the per-vertex descriptors of a mesh (or directory) to a dump.
    DumpDescriptors {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        descriptor: DescriptorArgs,
        #[arg(long, default_value_t = 1, value_parser = parse_delta)]
        delta_threshold: u8,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs one parsed invocation; report lines go to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    commands::dispatch(cli.command, cli.threads, out)
}
