//! Structural quality metrics: tile density, residual share, threshold
//! sweeps and reordering gains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::partition::{partition_rows, split_long_work, PartitionError, PartitionParams, Threshold, BLOCK_DIM};
use crate::reorder::{column_weights, objective, Permutation, ReorderError, WeightedJaccard};
use crate::rstile::{build_rstile, FormatError, RsTileMatrix};
use crate::sparse::{check_permutation, CsrMatrix, SparseError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("threshold sweep needs at least one value")]
    EmptySweep,
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Reorder(#[from] ReorderError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Real-nonzero density of the TC part and the share left to the residual
/// path. Padding never counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileDensityReport {
    pub mean_nnz_per_block: f64,
    pub mean_nnz_per_window: f64,
    pub block_count: usize,
    pub window_count: usize,
    pub tc_nnz: usize,
    pub residual_nnz: usize,
    /// Residual nonzeros over all nonzeros.
    pub residual_nnz_fraction: f64,
    /// Residual rows over rows holding at least one nonzero.
    pub residual_row_fraction: f64,
}

pub fn tile_density(m: &RsTileMatrix) -> TileDensityReport {
    let tc_nnz = m.tc.values.len();
    let residual_nnz = m.residual.nnz();
    let block_count = m.tc.block_count();
    let window_count = m.tc.logical_windows().len();

    let mut tc_rows_with_nnz = 0usize;
    for range in m.tc.logical_windows() {
        let blocks = m.tc.row_window_offset[range.start] as usize..m.tc.row_window_offset[range.end] as usize;
        let occupied = m.tc.bitmaps[blocks].iter().fold(0u64, |acc, &b| acc | b);
        tc_rows_with_nnz += (0..BLOCK_DIM).filter(|i| occupied >> (i * BLOCK_DIM) & 0xff != 0).count();
    }
    let residual_rows = m.residual.row_count();
    let total = tc_nnz + residual_nnz;
    let ratio = |x: usize, y: usize| if y == 0 { 0.0 } else { x as f64 / y as f64 };
    TileDensityReport {
        mean_nnz_per_block: ratio(tc_nnz, block_count),
        mean_nnz_per_window: ratio(tc_nnz, window_count),
        block_count,
        window_count,
        tc_nnz,
        residual_nnz,
        residual_nnz_fraction: ratio(residual_nnz, total),
        residual_row_fraction: ratio(residual_rows, tc_rows_with_nnz + residual_rows),
    }
}

/// Partitions, splits and encodes `a` under `p`.
pub fn build_with(a: &CsrMatrix, p: &PartitionParams) -> Result<RsTileMatrix, MetricsError> {
    let plan = split_long_work(a, &partition_rows(a, p)?, p)?;
    Ok(build_rstile(a, &plan, p.window_size)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau: usize,
    pub report: TileDensityReport,
}

pub const SWEEP_CSV_HEADER: &str = "tau,mean_nnz_per_block,mean_nnz_per_window,residual_nnz_fraction";

impl SweepPoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.tau,
            self.report.mean_nnz_per_block,
            self.report.mean_nnz_per_window,
            self.report.residual_nnz_fraction
        )
    }
}

/// Header line plus one row per sweep point.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.csv_row());
        out.push('\n');
    }
    out
}

/// Tile density for each `tau_nnz` override, other parameters unchanged.
pub fn threshold_sweep(
    a: &CsrMatrix,
    tau_values: &[usize],
    p: &PartitionParams,
) -> Result<Vec<SweepPoint>, MetricsError> {
    if tau_values.is_empty() {
        return Err(MetricsError::EmptySweep);
    }
    tau_values
        .par_iter()
        .map(|&tau| {
            let params = PartitionParams { tau_nnz: Threshold::Fixed(tau), ..p.clone() };
            let m = build_with(a, &params)?;
            Ok(SweepPoint { tau, report: tile_density(&m) })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReorderGain {
    pub objective_before: f64,
    pub objective_after: f64,
    pub block_count_before: usize,
    pub block_count_after: usize,
}

/// Objective and RS-Tile block count of `a` under two row orders.
pub fn reorder_gain(
    a: &CsrMatrix,
    before: &Permutation,
    after: &Permutation,
    alpha: f64,
    p: &PartitionParams,
) -> Result<ReorderGain, MetricsError> {
    check_permutation(&before.order, a.n_rows())?;
    check_permutation(&after.order, a.n_rows())?;
    let w = column_weights(a, alpha)?;
    let sim = WeightedJaccard::new(a, &w);
    let blocks = |perm: &Permutation| -> Result<usize, MetricsError> {
        Ok(build_with(&a.permute_rows(&perm.order)?, p)?.tc.block_count())
    };
    Ok(ReorderGain {
        objective_before: objective(&sim, &before.order),
        objective_after: objective(&sim, &after.order),
        block_count_before: blocks(before)?,
        block_count_after: blocks(after)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::PartitionPlan;
    use crate::partition::Window;
    use crate::sparse::generate_power_law;

    fn dense(n_rows: usize, n_cols: usize) -> CsrMatrix {
        let t: Vec<_> = (0..n_rows).flat_map(|r| (0..n_cols).map(move |c| (r, c, 1.0))).collect();
        CsrMatrix::from_triplets(n_rows, n_cols, &t).unwrap()
    }

    #[test]
    fn dense_block_is_saturated() {
        let m = build_with(&dense(8, 8), &PartitionParams::default()).unwrap();
        let r = tile_density(&m);
        assert_eq!(r.mean_nnz_per_block, 64.0);
        assert_eq!((r.block_count, r.window_count), (1, 1));
        assert_eq!(r.residual_nnz_fraction, 0.0);
    }

    #[test]
    fn residual_only_format() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (2, 1, 1.0)]).unwrap();
        let plan = PartitionPlan { windows: vec![], residual_rows: vec![0, 2] };
        let r = tile_density(&build_rstile(&a, &plan, 8).unwrap());
        assert_eq!((r.mean_nnz_per_block, r.mean_nnz_per_window, r.block_count), (0.0, 0.0, 0));
        assert_eq!(r.residual_nnz_fraction, 1.0);
        assert_eq!(r.residual_row_fraction, 1.0);
    }

    #[test]
    fn planted_two_blocks_per_window() {
        // each window: 8 rows over 16 columns, 20 nonzeros -> 2 blocks
        let mut t = Vec::new();
        for w in 0..3 {
            let (r0, c0) = (w * 8, w * 16);
            for r in 0..8 {
                t.push((r0 + r, c0 + r, 1.0));
                t.push((r0 + r, c0 + r + 8, 1.0));
            }
            for r in 0..4 {
                t.push((r0 + r, c0 + (r + 1) % 8, 1.0));
            }
        }
        let a = CsrMatrix::from_triplets(24, 48, &t).unwrap();
        assert_eq!(a.nnz(), 60);
        let plan = PartitionPlan {
            windows: (0..3).map(|w| Window { start: w * 8, rows: 8, segments: None }).collect(),
            residual_rows: vec![],
        };
        let r = tile_density(&build_rstile(&a, &plan, 8).unwrap());
        assert_eq!(r.mean_nnz_per_window, 20.0);
        assert_eq!(r.mean_nnz_per_block, 10.0);
    }

    #[test]
    fn counts_reconcile_and_tau_zero_has_no_residual() {
        let a = generate_power_law(500, 500, 4000, 1.5, 42).unwrap();
        let points = threshold_sweep(&a, &[0, 1, 2, 3, 4], &PartitionParams::default()).unwrap();
        for p in &points {
            assert_eq!(p.report.tc_nnz + p.report.residual_nnz, a.nnz());
        }
        assert_eq!(points[0].report.residual_nnz, 0);
        assert!(threshold_sweep(&a, &[], &PartitionParams::default()).is_err());
    }

    #[test]
    fn huge_tau_makes_low_increment_rows_residual() {
        let a = generate_power_law(200, 200, 3000, 1.5, 1).unwrap();
        let p = PartitionParams { tau_nnz: Threshold::Fixed(a.n_cols()), ..Default::default() };
        let plan = partition_rows(&a, &p).unwrap();
        for &r in &plan.residual_rows {
            assert!(crate::partition::column_increment(&a, r, 8) < 2);
        }
        for w in &plan.windows {
            assert!(crate::partition::column_increment(&a, w.start, 8) >= 2);
        }
    }

    #[test]
    fn csv_layout() {
        let a = dense(8, 8);
        let pts = threshold_sweep(&a, &[0], &PartitionParams::default()).unwrap();
        assert_eq!(sweep_csv(&pts), "tau,mean_nnz_per_block,mean_nnz_per_window,residual_nnz_fraction\n0,64,64,0\n");
    }

    #[test]
    fn same_order_same_gain() {
        let a = generate_power_law(100, 100, 800, 1.5, 2).unwrap();
        let w = column_weights(&a, 0.5).unwrap();
        let p = Permutation::identity(&WeightedJaccard::new(&a, &w));
        let g = reorder_gain(&a, &p, &p, 0.5, &PartitionParams::default()).unwrap();
        assert_eq!(g.objective_before, g.objective_after);
        assert_eq!(g.block_count_before, g.block_count_after);
    }

    #[test]
    fn identity_matrix_block_floor() {
        let a = CsrMatrix::identity(64);
        let p = PartitionParams { tau_nnz: Threshold::Fixed(0), ..Default::default() };
        let w = column_weights(&a, 0.5).unwrap();
        let id = Permutation::identity(&WeightedJaccard::new(&a, &w));
        let rev = Permutation { order: (0..64).rev().collect(), objective: 0.0 };
        let g = reorder_gain(&a, &id, &rev, 0.5, &p).unwrap();
        assert_eq!(g.block_count_before, 8);
        assert!(g.block_count_after >= 8);
    }
}
