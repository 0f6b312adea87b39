//! `rsh-spmm`: convert, reorder and multiply sparse matrices in the RS-Tile
//! format from the command line.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rsh_spmm::exec::Precision;
use rsh_spmm::partition::{PartitionParams, Threshold};

#[derive(Parser, Debug)]
#[command(name = "rsh-spmm", version, about = "RS-Tile sparse matrix tools")]
pub struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "RSTILE_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// Report format; JSON except for `partition-sweep`, which defaults to CSV.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Row-length statistics of a Matrix Market file.
    Stats { input: PathBuf },
    /// Reorder rows for similarity; writes the permutation and the permuted matrix.
    Reorder(ReorderArgs),
    /// Partition and encode a matrix as an RS-Tile file.
    Convert(ConvertArgs),
    /// Multiply an RS-Tile (or Matrix Market) matrix by a dense matrix.
    Spmm(SpmmArgs),
    /// Tile density for a range of row-nnz thresholds (CSV by default).
    PartitionSweep(SweepArgs),
    /// Convert and multiply every .mtx file in a directory.
    Bench(BenchArgs),
    /// Write a seeded synthetic matrix.
    Generate(GenerateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct PartitionArgs {
    /// Row-nnz threshold; `auto` derives it from the mean row length.
    #[arg(long, default_value = "auto", value_parser = parse_threshold)]
    pub tau_nnz: Threshold,
    /// Column-increment threshold; `auto` uses 2.
    #[arg(long, default_value = "auto", value_parser = parse_threshold)]
    pub tau_inc: Threshold,
    #[arg(long, default_value_t = 8)]
    pub window_size: usize,
    /// Blocks per work item before a window is split; `none` disables splitting.
    #[arg(long, default_value = "64", value_parser = parse_max_blocks)]
    pub max_blocks: MaxBlocks,
}

#[derive(Clone, Copy, Debug)]
pub struct MaxBlocks(pub Option<usize>);

impl PartitionArgs {
    pub fn params(&self) -> PartitionParams {
        PartitionParams {
            window_size: self.window_size,
            tau_nnz: self.tau_nnz,
            tau_inc: self.tau_inc,
            max_blocks_per_item: self.max_blocks.0,
            ..PartitionParams::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct ReorderArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 256)]
    pub max_candidates: usize,
    /// 2-opt segment length.
    #[arg(long, default_value_t = 64)]
    pub refine_window: usize,
    #[arg(long, default_value_t = 3)]
    pub max_passes: usize,
    #[arg(long, default_value_t = 0.05)]
    pub iso_threshold: f64,
    /// Reordered matrix (.mtx).
    #[arg(long)]
    pub output: PathBuf,
    /// Permutation file; defaults to the output path with a `.perm` extension.
    #[arg(long)]
    pub perm: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub partition: PartitionArgs,
    /// RS-Tile output file.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the partition plan as JSON.
    #[arg(long)]
    pub plan: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ExecArgs {
    /// Columns of the dense operand.
    #[arg(long, default_value_t = 64)]
    pub d: usize,
    /// Seed for the random dense operand.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Compare against the reference product and report the error.
    #[arg(long)]
    pub check: bool,
    #[arg(long, value_enum, default_value_t = PrecisionArg::F64)]
    pub precision: PrecisionArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    F32,
    F64,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        }
    }
}

#[derive(Args, Debug)]
pub struct SpmmArgs {
    /// RS-Tile file, or a .mtx file to convert on the fly.
    pub input: PathBuf,
    #[command(flatten)]
    pub exec: ExecArgs,
    /// Dense operand as a DMAT file instead of a random one.
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[command(flatten)]
    pub partition: PartitionArgs,
    /// Result matrix (DMAT).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub input: PathBuf,
    /// Inclusive threshold range, e.g. `0..8`, or a single value.
    #[arg(long, default_value = "0..8", value_parser = parse_range)]
    pub taus: (usize, usize),
    #[command(flatten)]
    pub partition: PartitionArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    pub corpus: PathBuf,
    #[command(flatten)]
    pub exec: ExecArgs,
    #[command(flatten)]
    pub partition: PartitionArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    /// Defaults to `rows`.
    #[arg(long)]
    pub cols: Option<usize>,
    /// Target nonzeros for the power-law generator.
    #[arg(long, default_value_t = 10_000)]
    pub nnz: usize,
    #[arg(long, default_value_t = 1.5)]
    pub skew: f64,
    /// Build a block-diagonal matrix with this many blocks instead.
    #[arg(long)]
    pub planted_blocks: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub block_rows: usize,
    #[arg(long, default_value_t = 8)]
    pub block_cols: usize,
    /// In-block density for planted matrices.
    #[arg(long, default_value_t = 0.6)]
    pub density: f64,
    /// Shuffle the rows with this seed.
    #[arg(long)]
    pub shuffle: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

fn parse_threshold(s: &str) -> Result<Threshold, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Threshold::Auto);
    }
    s.parse().map(Threshold::Fixed).map_err(|_| format!("expected `auto` or a count, got `{s}`"))
}

fn parse_max_blocks(s: &str) -> Result<MaxBlocks, String> {
    if s.eq_ignore_ascii_case("none") || s.eq_ignore_ascii_case("unbounded") {
        return Ok(MaxBlocks(None));
    }
    match s.parse::<usize>() {
        Ok(0) => Err("max-blocks must be at least 1".into()),
        Ok(n) => Ok(MaxBlocks(Some(n))),
        Err(_) => Err(format!("expected a count or `none`, got `{s}`")),
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let bad = || format!("expected `lo..hi` or a single count, got `{s}`");
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => {
            (lo.trim().parse().map_err(|_| bad())?, hi.trim_start_matches('=').trim().parse().map_err(|_| bad())?)
        }
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range `{s}`"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(2);
    }
    // ignore the error if a pool already exists
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
