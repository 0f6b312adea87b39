use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use rsh_spmm::exec::{execute, ExecConfig, ExecError};
use rsh_spmm::metrics::{sweep_csv, threshold_sweep, tile_density, MetricsError};
use rsh_spmm::partition::{partition_rows, split_long_work, PartitionPlan};
use rsh_spmm::reorder::{reorder_pipeline_traced, ReorderError, ReorderParams};
use rsh_spmm::rstile::{
    build_rstile, decode_rstile, read_rstile, storage_report, validate, write_rstile, FormatError, RsTileMatrix,
    HEADER_LEN,
};
use rsh_spmm::sparse::generate::{planted_blocks, random_permutation};
use rsh_spmm::sparse::{generate_power_law, read_matrix_market, row_stats, CsrMatrix, DenseMatrix, SparseError};

use crate::report::{emit, write_text};
use crate::{
    BenchArgs, Cli, Command, ConvertArgs, ExecArgs, Format, GenerateArgs, PartitionArgs, ReorderArgs, SpmmArgs,
    SweepArgs,
};

/// Usage and input problems exit with 2, broken internal invariants with 1.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Invariant(_) => 1,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    fn at(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Corrupt(_) => CliError::Invariant(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<ExecError> for CliError {
    fn from(e: ExecError) -> Self {
        match e {
            ExecError::Format(f) => f.into(),
            ExecError::LengthMismatch { .. } | ExecError::ColumnOutOfRange { .. } => CliError::Invariant(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Format(f) => f.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<ReorderError> for CliError {
    fn from(e: ReorderError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SparseError> for CliError {
    fn from(e: SparseError) -> Self {
        CliError::Input(e.to_string())
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let format = cli.format.unwrap_or(Format::Json);
    match &cli.command {
        Command::Stats { input } => cmd_stats(input, format),
        Command::Reorder(args) => cmd_reorder(args, format),
        Command::Convert(args) => cmd_convert(args, format),
        Command::Spmm(args) => cmd_spmm(args, cli.workers, format),
        Command::PartitionSweep(args) => cmd_partition_sweep(args, cli.format.unwrap_or(Format::Csv)),
        Command::Bench(args) => cmd_bench(args, cli.workers, format),
        Command::Generate(args) => cmd_generate(args, format),
    }
}

const RSTILE_MAGIC: &[u8; 4] = b"RSTL";

fn is_rstile_file(path: &Path) -> Result<bool, CliError> {
    let mut magic = [0u8; 4];
    let mut f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let n = f.read(&mut magic).map_err(|e| CliError::io(path, e))?;
    Ok(n == 4 && &magic == RSTILE_MAGIC)
}

fn load_rstile(path: &Path) -> Result<RsTileMatrix, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    // a file that fails validation is bad input, not an internal fault
    read_rstile(BufReader::new(f)).map_err(|e| CliError::at(path, e))
}

/// Reads a Matrix Market file, or decodes an RS-Tile file.
fn load_csr(path: &Path) -> Result<CsrMatrix, CliError> {
    if is_rstile_file(path)? {
        let m = load_rstile(path)?;
        return decode_rstile(&m).map_err(|e| CliError::at(path, e));
    }
    read_matrix_market(path).map_err(|e| CliError::at(path, e))
}

fn build_checked(a: &CsrMatrix, p: &PartitionArgs) -> Result<(PartitionPlan, RsTileMatrix), CliError> {
    let params = p.params();
    let plan = partition_rows(a, &params).map_err(|e| CliError::Input(e.to_string()))?;
    let plan = split_long_work(a, &plan, &params).map_err(|e| CliError::Input(e.to_string()))?;
    let m = build_rstile(a, &plan, params.window_size)?;
    let violations = validate(&m);
    if let Some(v) = violations.first() {
        return Err(CliError::Invariant(format!("{} violation(s), first: {v}", violations.len())));
    }
    Ok((plan, m))
}

fn cmd_stats(input: &Path, format: Format) -> Result<(), CliError> {
    let a = load_csr(input)?;
    let mut v = serde_json::to_value(row_stats(&a)).expect("serializable");
    v.as_object_mut().expect("object").remove("per_row_nnz");
    emit(&v, format, None)
}

fn cmd_reorder(args: &ReorderArgs, format: Format) -> Result<(), CliError> {
    let a = load_csr(&args.input)?;
    let params = ReorderParams {
        alpha: args.alpha,
        k: args.k,
        max_candidates: args.max_candidates,
        window: args.refine_window,
        max_passes: args.max_passes,
        iso_threshold: args.iso_threshold,
    };
    let (perm, reordered, trace) = reorder_pipeline_traced(&a, &params)?;

    let perm_path = args.perm.clone().unwrap_or_else(|| args.output.with_extension("perm"));
    let f = File::create(&perm_path).map_err(|e| CliError::io(&perm_path, e))?;
    perm.write_text(BufWriter::new(f)).map_err(|e| CliError::at(&perm_path, e))?;
    save_mtx(&reordered, &args.output)?;

    let v = json!({
        "n_rows": a.n_rows(),
        "nnz": a.nnz(),
        "objective_before": trace.identity,
        "objective_after": perm.objective,
        "stages": trace,
    });
    emit(&v, format, None)
}

fn save_mtx(a: &CsrMatrix, path: &Path) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    rsh_spmm::sparse::write_matrix_market(a, &mut w).map_err(|e| CliError::at(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn structure_report(a: &CsrMatrix, m: &RsTileMatrix, plan: &PartitionPlan) -> Value {
    json!({
        "n_rows": a.n_rows(),
        "n_cols": a.n_cols(),
        "nnz": a.nnz(),
        "windows": plan.windows.len(),
        "split_windows": plan.windows.iter().filter(|w| w.segments.is_some()).count(),
        "tc_entries": m.tc.entry_count(),
        "residual_rows": plan.residual_rows.len(),
        "storage": storage_report(a, m),
        "density": tile_density(m),
    })
}

fn cmd_convert(args: &ConvertArgs, format: Format) -> Result<(), CliError> {
    let a = load_csr(&args.input)?;
    let (plan, m) = build_checked(&a, &args.partition)?;

    let f = File::create(&args.output).map_err(|e| CliError::io(&args.output, e))?;
    let mut w = BufWriter::new(f);
    write_rstile(&m, &mut w)?;
    w.flush().map_err(|e| CliError::io(&args.output, e))?;
    drop(w);
    if let Some(plan_path) = &args.plan {
        write_text(&plan.to_json(), Some(plan_path))?;
    }

    let file_bytes = fs::metadata(&args.output).map_err(|e| CliError::io(&args.output, e))?.len() as usize;
    let storage = storage_report(&a, &m);
    if file_bytes != storage.rstile_bytes + HEADER_LEN {
        return Err(CliError::Invariant(format!(
            "wrote {file_bytes} bytes, storage report predicts {} + {HEADER_LEN}",
            storage.rstile_bytes
        )));
    }
    let mut v = structure_report(&a, &m, &plan);
    v["file_bytes"] = json!(file_bytes);
    v["header_bytes"] = json!(HEADER_LEN);
    emit(&v, format, None)
}

fn dense_operand(exec: &ExecArgs, b_path: Option<&Path>, n_cols: usize) -> Result<DenseMatrix, CliError> {
    let b = match b_path {
        Some(p) => DenseMatrix::load(p).map_err(|e| CliError::at(p, e))?,
        None => {
            if exec.d == 0 {
                return Err(CliError::Input("--d must be at least 1".into()));
            }
            DenseMatrix::random_uniform(n_cols, exec.d, exec.seed)
        }
    };
    if b.n_rows() != n_cols {
        return Err(CliError::Input(format!("B has {} rows but A has {n_cols} columns", b.n_rows())));
    }
    Ok(b)
}

struct SpmmRun {
    c: DenseMatrix,
    max_relative_error: Option<f64>,
    seconds: f64,
}

fn run_spmm(m: &RsTileMatrix, b: &DenseMatrix, exec: &ExecArgs, workers: usize) -> Result<SpmmRun, CliError> {
    let cfg =
        ExecConfig { num_workers: workers, check_against_oracle: false, accumulate_precision: exec.precision.into() };
    let t = Instant::now();
    let out = execute(m, b, &cfg)?;
    let seconds = t.elapsed().as_secs_f64();
    let max_relative_error = if exec.check {
        let reference = rsh_spmm::sparse::oracle_spmm(&decode_rstile(m)?, b)?;
        Some(out.c.max_relative_error(&reference)?)
    } else {
        None
    };
    Ok(SpmmRun { c: out.c, max_relative_error, seconds })
}

fn timing(seconds: f64, nnz: usize, d: usize) -> Value {
    let gflops = if seconds > 0.0 { 2.0 * nnz as f64 * d as f64 / seconds / 1e9 } else { 0.0 };
    json!({ "wall_seconds": seconds, "gflops": gflops })
}

fn cmd_spmm(args: &SpmmArgs, workers: usize, format: Format) -> Result<(), CliError> {
    let m = if is_rstile_file(&args.input)? {
        load_rstile(&args.input)?
    } else {
        let a = read_matrix_market(&args.input).map_err(|e| CliError::at(&args.input, e))?;
        build_checked(&a, &args.partition)?.1
    };
    let b = dense_operand(&args.exec, args.b.as_deref(), m.n_cols)?;
    let run = run_spmm(&m, &b, &args.exec, workers)?;
    if let Some(out) = &args.output {
        run.c.save(out).map_err(|e| CliError::at(out, e))?;
    }
    let checksum: f64 = run.c.data().iter().map(|&x| x as f64).sum();
    let v = json!({
        "n_rows": m.n_rows,
        "n_cols": m.n_cols,
        "nnz": m.nnz(),
        "d": b.n_cols(),
        "seed": args.exec.seed,
        "precision": format!("{:?}", args.exec.precision).to_lowercase(),
        "c_sum": checksum,
        "max_relative_error": run.max_relative_error,
        "timing": timing(run.seconds, m.nnz(), b.n_cols()),
    });
    emit(&v, format, None)
}

fn cmd_partition_sweep(args: &SweepArgs, format: Format) -> Result<(), CliError> {
    let a = load_csr(&args.input)?;
    let taus: Vec<usize> = (args.taus.0..=args.taus.1).collect();
    let points = threshold_sweep(&a, &taus, &args.partition.params())?;
    match format {
        Format::Csv => write_text(&sweep_csv(&points), args.output.as_deref()),
        Format::Json => emit(&serde_json::to_value(&points).expect("serializable"), format, args.output.as_deref()),
    }
}

fn cmd_bench(args: &BenchArgs, workers: usize, format: Format) -> Result<(), CliError> {
    let dir = &args.corpus;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mtx") && p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        eprintln!("warning: no .mtx files in {}", dir.display());
    }

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for path in &files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let a = match read_matrix_market(path) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", path.display());
                skipped.push(name);
                continue;
            }
        };
        let t = Instant::now();
        let (plan, m) = build_checked(&a, &args.partition)?;
        let convert_seconds = t.elapsed().as_secs_f64();
        let b = dense_operand(&args.exec, None, a.n_cols())?;
        let run = run_spmm(&m, &b, &args.exec, workers)?;

        let mut v = structure_report(&a, &m, &plan);
        v["name"] = json!(name);
        v["max_relative_error"] = json!(run.max_relative_error);
        v["timing"] = timing(run.seconds, a.nnz(), b.n_cols());
        v["timing"]["convert_seconds"] = json!(convert_seconds);
        entries.push(v);
    }
    let v = json!({ "count": entries.len(), "matrices": entries, "skipped": skipped });
    emit(&v, format, args.output.as_deref())
}

fn cmd_generate(args: &GenerateArgs, format: Format) -> Result<(), CliError> {
    let a = match args.planted_blocks {
        Some(n) => planted_blocks(n, args.block_rows, args.block_cols, args.density, args.seed)?,
        None => generate_power_law(args.rows, args.cols.unwrap_or(args.rows), args.nnz, args.skew, args.seed)?,
    };
    let a = match args.shuffle {
        Some(s) => a.permute_rows(&random_permutation(a.n_rows(), s))?,
        None => a,
    };
    save_mtx(&a, &args.output)?;
    let v = json!({ "n_rows": a.n_rows(), "n_cols": a.n_cols(), "nnz": a.nnz() });
    emit(&v, format, None)
}
