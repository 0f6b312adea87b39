//! Hybrid SpMM executor.
//!
//! The tensor-core path expands each bitmap block into a dense 8×8 fragment
//! and multiplies it against the 8 rows of `B` its column ids select,
//! accumulating into a per-window 8×d tile. The residual path streams each
//! short row straight into its output row. The two paths write disjoint rows
//! of `C`.
//!
//! Every output element is produced by one sequential loop whose order
//! depends only on the format (blocks in offset order, split segments in
//! segment order), never on the worker count, so results are reproducible
//! bit for bit for a given precision.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::partition::BLOCK_DIM;
use crate::rstile::{decode_rstile, FormatError, RsTileMatrix};
use crate::sparse::{oracle_spmm, DenseMatrix, SparseError};

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tile has {values} values for a bitmap with {bits} set bits")]
    LengthMismatch { bits: usize, values: usize },
    #[error("column {col} outside B's {rows} rows (corrupt format)")]
    ColumnOutOfRange { col: usize, rows: usize },
    #[error("invalid executor configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecConfig {
    pub num_workers: usize,
    pub check_against_oracle: bool,
    pub accumulate_precision: Precision,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self { num_workers: 1, check_against_oracle: false, accumulate_precision: Precision::F64 }
    }
}

/// Dense row-major 8×8 tile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fragment8x8 {
    pub data: [f32; 64],
}

impl Fragment8x8 {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * BLOCK_DIM + col]
    }

    /// Scans the fragment for nonzero positions: the inverse of [`decode_tile`]
    /// for tiles without explicit zeros.
    pub fn encode(&self) -> (u64, Vec<f32>) {
        let mut bitmap = 0u64;
        let mut values = Vec::new();
        for (b, &v) in self.data.iter().enumerate() {
            if v != 0.0 {
                bitmap |= 1 << b;
                values.push(v);
            }
        }
        (bitmap, values)
    }
}

/// Expands a packed block: set bit `b` receives `values[rank(b)]`, where the
/// rank is the number of set bits below `b`.
pub fn decode_tile(bitmap: u64, values: &[f32]) -> Result<Fragment8x8, ExecError> {
    let bits = bitmap.count_ones() as usize;
    if bits != values.len() {
        return Err(ExecError::LengthMismatch { bits, values: values.len() });
    }
    let mut data = [0f32; 64];
    for (b, slot) in data.iter_mut().enumerate() {
        if bitmap >> b & 1 == 1 {
            let below = bitmap & ((1u64 << b) - 1);
            *slot = values[below.count_ones() as usize];
        }
    }
    Ok(Fragment8x8 { data })
}

trait Accum: Copy + Send + Sync + 'static {
    const ZERO: Self;
    fn mul_add(self, a: f32, b: f32) -> Self;
    fn to_f32(self) -> f32;
}

impl Accum for f32 {
    const ZERO: Self = 0.0;
    #[inline]
    fn mul_add(self, a: f32, b: f32) -> Self {
        self + a * b
    }
    #[inline]
    fn to_f32(self) -> f32 {
        self
    }
}

impl Accum for f64 {
    const ZERO: Self = 0.0;
    #[inline]
    fn mul_add(self, a: f32, b: f32) -> Self {
        self + a as f64 * b as f64
    }
    #[inline]
    fn to_f32(self) -> f32 {
        self as f32
    }
}

/// Window-local 8×d output tile.
#[derive(Clone, Debug, PartialEq)]
pub enum WindowAccumulator {
    F32 { d: usize, data: Vec<f32> },
    F64 { d: usize, data: Vec<f64> },
}

impl WindowAccumulator {
    pub fn zeros(d: usize, precision: Precision) -> Self {
        match precision {
            Precision::F32 => Self::F32 { d, data: vec![0.0; BLOCK_DIM * d] },
            Precision::F64 => Self::F64 { d, data: vec![0.0; BLOCK_DIM * d] },
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Self::F32 { d, .. } | Self::F64 { d, .. } => *d,
        }
    }

    /// Row `i` rounded to `f32`.
    pub fn row(&self, i: usize) -> Vec<f32> {
        match self {
            Self::F32 { d, data } => data[i * d..(i + 1) * d].to_vec(),
            Self::F64 { d, data } => data[i * d..(i + 1) * d].iter().map(|&x| x as f32).collect(),
        }
    }
}

/// Executes RS-Tile matrices; caches each block's value offset.
pub struct HybridExecutor<'a> {
    m: &'a RsTileMatrix,
    value_offsets: Vec<usize>,
}

/// Output rows written by each path.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WriteSets {
    pub tc_rows: Vec<usize>,
    pub residual_rows: Vec<usize>,
}

impl<'a> HybridExecutor<'a> {
    pub fn new(m: &'a RsTileMatrix) -> Self {
        Self { m, value_offsets: m.tc.block_value_offsets() }
    }

    fn check_b(&self, b: &DenseMatrix) -> Result<(), ExecError> {
        if self.m.n_cols != b.n_rows() {
            return Err(ExecError::DimensionMismatch(format!(
                "A is {}x{} but B is {}x{}",
                self.m.n_rows,
                self.m.n_cols,
                b.n_rows(),
                b.n_cols()
            )));
        }
        Ok(())
    }

    fn tc_entry<T: Accum>(&self, entry: usize, b: &DenseMatrix, acc: &mut [T], d: usize) -> Result<(), ExecError> {
        let tc = &self.m.tc;
        for t in tc.entry_blocks(entry) {
            let bitmap = tc.bitmaps[t];
            let vals = &tc.values[self.value_offsets[t]..self.value_offsets[t + 1]];
            let frag = decode_tile(bitmap, vals)?;
            let cols = &tc.col_id[t * BLOCK_DIM..(t + 1) * BLOCK_DIM];
            let mut gather: [&[f32]; BLOCK_DIM] = [&[]; BLOCK_DIM];
            for (k, &c) in cols.iter().enumerate() {
                let c = c as usize;
                if c >= b.n_rows() {
                    return Err(ExecError::ColumnOutOfRange { col: c, rows: b.n_rows() });
                }
                gather[k] = b.row(c);
            }
            // unset positions hold exact zeros; skip them
            let mut bits = bitmap;
            while bits != 0 {
                let pos = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let (i, k) = (pos / BLOCK_DIM, pos % BLOCK_DIM);
                let a = frag.get(i, k);
                for (s, &x) in acc[i * d..(i + 1) * d].iter_mut().zip(gather[k]) {
                    *s = s.mul_add(a, x);
                }
            }
        }
        Ok(())
    }

    /// Adds the product of window entry `entry` with `B` into `c_out`.
    pub fn exec_tc_window(
        &self,
        entry: usize,
        b: &DenseMatrix,
        c_out: &mut WindowAccumulator,
    ) -> Result<(), ExecError> {
        self.check_b(b)?;
        if entry >= self.m.tc.entry_count() {
            return Err(ExecError::Config(format!("window entry {entry} out of range")));
        }
        if c_out.d() != b.n_cols() {
            return Err(ExecError::DimensionMismatch(format!(
                "accumulator width {} but B has {} columns",
                c_out.d(),
                b.n_cols()
            )));
        }
        match c_out {
            WindowAccumulator::F32 { d, data } => self.tc_entry(entry, b, data, *d),
            WindowAccumulator::F64 { d, data } => self.tc_entry(entry, b, data, *d),
        }
    }

    fn residual_row<T: Accum>(&self, i: usize, b: &DenseMatrix) -> Result<Vec<f32>, ExecError> {
        let d = b.n_cols();
        let (cols, vals) = self.m.residual.row_entries(i);
        let mut acc = vec![T::ZERO; d];
        for (&c, &v) in cols.iter().zip(vals) {
            let c = c as usize;
            if c >= b.n_rows() {
                return Err(ExecError::ColumnOutOfRange { col: c, rows: b.n_rows() });
            }
            for (s, &x) in acc.iter_mut().zip(b.row(c)) {
                *s = s.mul_add(v, x);
            }
        }
        Ok(acc.into_iter().map(Accum::to_f32).collect())
    }

    /// Adds every residual row's product into `c`; other rows are untouched.
    pub fn exec_residual(&self, b: &DenseMatrix, c: &mut DenseMatrix, precision: Precision) -> Result<(), ExecError> {
        self.check_b(b)?;
        if c.n_rows() != self.m.n_rows || c.n_cols() != b.n_cols() {
            return Err(ExecError::DimensionMismatch(format!(
                "C is {}x{}, expected {}x{}",
                c.n_rows(),
                c.n_cols(),
                self.m.n_rows,
                b.n_cols()
            )));
        }
        let rows = self.residual_rows(b, precision)?;
        for (r, vals) in rows {
            for (o, v) in c.row_mut(r).iter_mut().zip(vals) {
                *o += v;
            }
        }
        Ok(())
    }

    fn residual_rows(&self, b: &DenseMatrix, precision: Precision) -> Result<Vec<(usize, Vec<f32>)>, ExecError> {
        (0..self.m.residual.row_count())
            .into_par_iter()
            .map(|i| {
                let r = self.m.residual.row_id[i] as usize;
                let vals = match precision {
                    Precision::F32 => self.residual_row::<f32>(i, b)?,
                    Precision::F64 => self.residual_row::<f64>(i, b)?,
                };
                Ok((r, vals))
            })
            .collect()
    }

    fn logical_window<T: Accum>(
        &self,
        entries: std::ops::Range<usize>,
        b: &DenseMatrix,
    ) -> Result<(usize, Vec<f32>), ExecError> {
        let d = b.n_cols();
        let start = self.m.tc.row_window_id[entries.start] as usize;
        let rows = self.m.window_rows(start).len();
        let mut acc = vec![T::ZERO; BLOCK_DIM * d];
        // segments of one window chain into the same tile in segment order
        for e in entries {
            self.tc_entry(e, b, &mut acc, d)?;
        }
        Ok((start, acc[..rows * d].iter().map(|x| x.to_f32()).collect()))
    }

    fn run_inner(&self, b: &DenseMatrix, precision: Precision) -> Result<(DenseMatrix, WriteSets), ExecError> {
        self.check_b(b)?;
        let d = b.n_cols();
        let windows: Vec<(usize, Vec<f32>)> = self
            .m
            .tc
            .logical_windows()
            .into_par_iter()
            .map(|range| match precision {
                Precision::F32 => self.logical_window::<f32>(range, b),
                Precision::F64 => self.logical_window::<f64>(range, b),
            })
            .collect::<Result<_, _>>()?;
        let residual = self.residual_rows(b, precision)?;

        let mut c = DenseMatrix::zeros(self.m.n_rows, d);
        let mut sets = WriteSets::default();
        for (start, tile) in windows {
            for i in 0..self.m.window_rows(start).len() {
                sets.tc_rows.push(start + i);
                c.row_mut(start + i).copy_from_slice(&tile[i * d..(i + 1) * d]);
            }
        }
        for (r, vals) in residual {
            sets.residual_rows.push(r);
            c.row_mut(r).copy_from_slice(&vals);
        }
        Ok((c, sets))
    }

    /// Full product `C = A × B` with the write sets of both paths.
    pub fn run_traced(&self, b: &DenseMatrix, cfg: &ExecConfig) -> Result<(DenseMatrix, WriteSets), ExecError> {
        if cfg.num_workers == 0 {
            return Err(ExecError::Config("num_workers must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.num_workers)
            .build()
            .map_err(|e| ExecError::Config(e.to_string()))?;
        pool.install(|| self.run_inner(b, cfg.accumulate_precision))
    }
}

/// `C = A × B` for an RS-Tile encoded `A`.
pub fn hybrid_spmm(m: &RsTileMatrix, b: &DenseMatrix, cfg: &ExecConfig) -> Result<DenseMatrix, ExecError> {
    HybridExecutor::new(m).run_traced(b, cfg).map(|(c, _)| c)
}

#[derive(Clone, Debug)]
pub struct ExecOutcome {
    pub c: DenseMatrix,
    /// Present when the config asks for an oracle comparison.
    pub max_relative_error: Option<f64>,
}

/// Runs [`hybrid_spmm`] and, if configured, compares against the reference
/// product of the decoded matrix.
pub fn execute(m: &RsTileMatrix, b: &DenseMatrix, cfg: &ExecConfig) -> Result<ExecOutcome, ExecError> {
    let c = hybrid_spmm(m, b, cfg)?;
    let max_relative_error = if cfg.check_against_oracle {
        let reference = oracle_spmm(&decode_rstile(m)?, b)?;
        Some(c.max_relative_error(&reference)?)
    } else {
        None
    };
    Ok(ExecOutcome { c, max_relative_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{partition_rows, PartitionParams, PartitionPlan, Window};
    use crate::rstile::build_rstile;
    use crate::sparse::{generate_power_law, CsrMatrix};

    fn build(a: &CsrMatrix, p: &PartitionParams) -> RsTileMatrix {
        build_rstile(a, &partition_rows(a, p).unwrap(), p.window_size).unwrap()
    }

    #[test]
    fn decode_empty_and_full() {
        assert_eq!(decode_tile(0, &[]).unwrap().data, [0.0; 64]);
        let vals: Vec<f32> = (0..64).map(|v| v as f32).collect();
        assert_eq!(decode_tile(u64::MAX, &vals).unwrap().data.to_vec(), vals);
    }

    #[test]
    fn decode_rank_placement() {
        let f = decode_tile(0x201, &[3.0, 4.0]).unwrap();
        assert_eq!(f.get(0, 0), 3.0);
        assert_eq!(f.get(1, 1), 4.0);
        assert_eq!(f.data.iter().filter(|&&v| v != 0.0).count(), 2);
        assert!(matches!(decode_tile(0x201, &[1.0]), Err(ExecError::LengthMismatch { bits: 2, values: 1 })));
    }

    #[test]
    fn identity_block_copies_b() {
        let a = CsrMatrix::identity(8);
        let plan = PartitionPlan { windows: vec![Window { start: 0, rows: 8, segments: None }], residual_rows: vec![] };
        let m = build_rstile(&a, &plan, 8).unwrap();
        let b = DenseMatrix::random_uniform(8, 5, 3);
        let ex = HybridExecutor::new(&m);
        let mut acc = WindowAccumulator::zeros(5, Precision::F64);
        ex.exec_tc_window(0, &b, &mut acc).unwrap();
        for i in 0..8 {
            assert_eq!(acc.row(i), b.row(i));
        }
    }

    #[test]
    fn zero_bitmap_leaves_accumulator() {
        let a = CsrMatrix::from_triplets(1, 8, &[(0, 0, 1.0)]).unwrap();
        let plan = PartitionPlan { windows: vec![Window { start: 0, rows: 1, segments: None }], residual_rows: vec![] };
        let mut m = build_rstile(&a, &plan, 8).unwrap();
        m.tc.bitmaps[0] = 0;
        m.tc.values.clear();
        let b = DenseMatrix::random_uniform(8, 3, 1);
        let mut acc = WindowAccumulator::zeros(3, Precision::F32);
        HybridExecutor::new(&m).exec_tc_window(0, &b, &mut acc).unwrap();
        assert_eq!(acc, WindowAccumulator::zeros(3, Precision::F32));
    }

    #[test]
    fn window_matches_oracle_rows() {
        let a = generate_power_law(8, 16, 40, 1.5, 8).unwrap();
        let plan = PartitionPlan { windows: vec![Window { start: 0, rows: 8, segments: None }], residual_rows: vec![] };
        let m = build_rstile(&a, &plan, 8).unwrap();
        let b = DenseMatrix::random_uniform(16, 4, 2);
        let mut acc = WindowAccumulator::zeros(4, Precision::F64);
        HybridExecutor::new(&m).exec_tc_window(0, &b, &mut acc).unwrap();
        let reference = oracle_spmm(&a, &b).unwrap();
        for i in 0..8 {
            assert_eq!(acc.row(i), reference.row(i));
        }
    }

    #[test]
    fn residual_single_entry() {
        let a = CsrMatrix::from_triplets(2, 4, &[(1, 3, 2.0)]).unwrap();
        let plan = PartitionPlan { windows: vec![], residual_rows: vec![1] };
        let m = build_rstile(&a, &plan, 8).unwrap();
        let mut bdata = vec![0.0; 8];
        bdata[6] = 1.0;
        bdata[7] = 1.0;
        let b = DenseMatrix::from_vec(4, 2, bdata).unwrap();
        let mut c = DenseMatrix::zeros(2, 2);
        HybridExecutor::new(&m).exec_residual(&b, &mut c, Precision::F64).unwrap();
        assert_eq!(c.data(), &[0.0, 0.0, 2.0, 2.0]);
    }

    #[test]
    fn empty_residual_part_touches_nothing() {
        let t: Vec<_> = (0..64).map(|i| (i / 8, i % 8, 1.0)).collect();
        let a = CsrMatrix::from_triplets(8, 8, &t).unwrap();
        let m = build(&a, &PartitionParams::default());
        let b = DenseMatrix::random_uniform(8, 2, 4);
        let mut c = DenseMatrix::from_vec(8, 2, vec![7.0; 16]).unwrap();
        HybridExecutor::new(&m).exec_residual(&b, &mut c, Precision::F32).unwrap();
        assert!(c.data().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn identity_product_is_b() {
        let a = CsrMatrix::identity(50);
        let b = DenseMatrix::random_uniform(50, 7, 9);
        for tau in [0, 4] {
            let p = PartitionParams { tau_nnz: crate::partition::Threshold::Fixed(tau), ..Default::default() };
            let m = build(&a, &p);
            assert_eq!(hybrid_spmm(&m, &b, &ExecConfig::default()).unwrap(), b);
        }
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let a = generate_power_law(500, 400, 6000, 1.2, 3).unwrap();
        let m = build(&a, &PartitionParams::default());
        let b = DenseMatrix::random_uniform(400, 16, 1);
        for precision in [Precision::F32, Precision::F64] {
            let one = ExecConfig { num_workers: 1, accumulate_precision: precision, ..Default::default() };
            let eight = ExecConfig { num_workers: 8, ..one.clone() };
            assert_eq!(hybrid_spmm(&m, &b, &one).unwrap(), hybrid_spmm(&m, &b, &eight).unwrap());
        }
    }

    #[test]
    fn f32_accumulation_close_to_oracle() {
        let a = generate_power_law(300, 300, 5000, 1.5, 6).unwrap();
        let m = build(&a, &PartitionParams::default());
        let b = DenseMatrix::random_uniform(300, 8, 2);
        let cfg = ExecConfig { accumulate_precision: Precision::F32, check_against_oracle: true, ..Default::default() };
        let out = execute(&m, &b, &cfg).unwrap();
        assert!(out.max_relative_error.unwrap() <= 1e-5);
    }

    #[test]
    fn errors() {
        let a = CsrMatrix::identity(4);
        let m = build(&a, &PartitionParams::default());
        let b = DenseMatrix::zeros(5, 2);
        assert!(matches!(hybrid_spmm(&m, &b, &ExecConfig::default()), Err(ExecError::DimensionMismatch(_))));
        let b = DenseMatrix::zeros(4, 2);
        let cfg = ExecConfig { num_workers: 0, ..Default::default() };
        assert!(matches!(hybrid_spmm(&m, &b, &cfg), Err(ExecError::Config(_))));
    }

    #[test]
    fn write_sets_are_disjoint() {
        let a = generate_power_law(400, 400, 3000, 1.5, 12).unwrap();
        let m = build(&a, &PartitionParams::default());
        let b = DenseMatrix::random_uniform(400, 4, 1);
        let (_, sets) = HybridExecutor::new(&m).run_traced(&b, &ExecConfig::default()).unwrap();
        assert!(!sets.residual_rows.is_empty() && !sets.tc_rows.is_empty());
        let tc: std::collections::HashSet<_> = sets.tc_rows.iter().collect();
        assert!(sets.residual_rows.iter().all(|r| !tc.contains(r)));
    }

    #[test]
    fn fragment_reencode() {
        let f = decode_tile(0x8000_0000_0000_0201, &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(f.encode(), (0x8000_0000_0000_0201, vec![1.0, -2.0, 3.0]));
    }
}
