//! Row-level execution partitioning.
//!
//! A sequential scan decides, row by row, whether the current row heads a
//! tensor-core row window of `window_size` rows or is routed to the scalar
//! residual path. A row goes to the residual path when it is short
//! (`nnz <= tau_nnz`) and adds fewer than `tau_inc` new columns to the
//! window it would head. Windows whose compacted column space needs more
//! than `max_blocks_per_item` 8-column blocks are later split along the
//! block dimension into independent work segments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::CsrMatrix;

/// Width (and maximum height) of a tensor-core block.
pub const BLOCK_DIM: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("invalid partition parameters: {0}")]
    Params(String),
    #[error("plan does not match matrix: {0}")]
    Mismatch(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionParams {
    /// Rows per window; at most [`BLOCK_DIM`].
    pub window_size: usize,
    pub tau_nnz: Threshold,
    pub tau_inc: Threshold,
    /// A row is super-long when `nnz > split_factor * mean_nnz`.
    pub split_factor: f64,
    /// Also split windows that hold a super-long row.
    pub split_long_rows: bool,
    /// Upper bound on blocks per work segment; `None` disables splitting.
    pub max_blocks_per_item: Option<usize>,
}

impl Default for PartitionParams {
    fn default() -> Self {
        Self {
            window_size: BLOCK_DIM,
            tau_nnz: Threshold::Auto,
            tau_inc: Threshold::Auto,
            split_factor: 4.0,
            split_long_rows: false,
            max_blocks_per_item: Some(64),
        }
    }
}

impl PartitionParams {
    pub fn validate(&self) -> Result<(), PartitionError> {
        if self.window_size == 0 || self.window_size > BLOCK_DIM {
            return Err(PartitionError::Params(format!(
                "window_size must be in 1..={BLOCK_DIM}, got {}",
                self.window_size
            )));
        }
        if self.split_factor.is_nan() || self.split_factor <= 1.0 {
            return Err(PartitionError::Params(format!("split_factor must exceed 1, got {}", self.split_factor)));
        }
        if self.max_blocks_per_item == Some(0) {
            return Err(PartitionError::Params("max_blocks_per_item must be at least 1".into()));
        }
        Ok(())
    }

    /// Concrete `(tau_nnz, tau_inc)` for `a`, estimating any `Auto` value.
    pub fn resolve(&self, a: &CsrMatrix) -> (usize, usize) {
        let (est_nnz, est_inc) = estimate_thresholds(a.n_rows().max(1), a.nnz());
        let pick = |t: Threshold, est| match t {
            Threshold::Auto => est,
            Threshold::Fixed(v) => v,
        };
        (pick(self.tau_nnz, est_nnz), pick(self.tau_inc, est_inc))
    }
}

/// Default thresholds: `tau_nnz` is half the mean row length clamped to
/// `[2, 6]`, `tau_inc` is 2.
pub fn estimate_thresholds(n_rows: usize, nnz: usize) -> (usize, usize) {
    let mean = nnz as f64 / n_rows.max(1) as f64;
    let tau_nnz = (mean / 2.0).round().clamp(2.0, 6.0) as usize;
    (tau_nnz, 2)
}

/// Half-open block range `[begin, end)` within one window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment(pub usize, pub usize);

impl Segment {
    pub fn len(&self) -> usize {
        self.1 - self.0
    }

    pub fn is_empty(&self) -> bool {
        self.1 == self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<Segment>>,
}

impl Window {
    pub fn row_range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.rows
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub windows: Vec<Window>,
    #[serde(rename = "residual")]
    pub residual_rows: Vec<usize>,
}

impl PartitionPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn window_nnz(&self, a: &CsrMatrix) -> usize {
        self.windows.iter().map(|w| w.row_range().map(|r| a.row_nnz(r)).sum::<usize>()).sum()
    }

    pub fn residual_nnz(&self, a: &CsrMatrix) -> usize {
        self.residual_rows.iter().map(|&r| a.row_nnz(r)).sum()
    }

    /// Checks the plan against `a`: windows ascending, disjoint and in range,
    /// no window headed by an empty row, residual rows ascending, non-empty
    /// and outside every window, every non-empty row covered exactly once,
    /// and segments tiling each window's block range.
    pub fn check(&self, a: &CsrMatrix, window_size: usize) -> Result<(), PartitionError> {
        let n = a.n_rows();
        let mismatch = |m: String| Err(PartitionError::Mismatch(m));
        let mut owner = vec![false; n];
        let mut prev_end = 0usize;
        for (i, w) in self.windows.iter().enumerate() {
            if w.rows == 0 || w.rows > window_size {
                return mismatch(format!("window {i} has {} rows (limit {window_size})", w.rows));
            }
            if w.start < prev_end || w.start + w.rows > n {
                return mismatch(format!(
                    "window {i} [{}, {}) overlaps or leaves the matrix",
                    w.start,
                    w.start + w.rows
                ));
            }
            if a.row_nnz(w.start) == 0 {
                return mismatch(format!("window {i} starts on empty row {}", w.start));
            }
            prev_end = w.start + w.rows;
            for r in w.row_range() {
                owner[r] = true;
            }
            if let Some(segs) = &w.segments {
                let blocks = projected_blocks(a, w);
                let mut expect = 0;
                for s in segs {
                    if s.0 != expect || s.is_empty() {
                        return mismatch(format!("window {i} segments are not contiguous"));
                    }
                    expect = s.1;
                }
                if expect != blocks {
                    return mismatch(format!("window {i} segments cover {expect} of {blocks} blocks"));
                }
            }
        }
        let mut prev: Option<usize> = None;
        for &r in &self.residual_rows {
            if r >= n || prev.is_some_and(|p| p >= r) {
                return mismatch(format!("residual row {r} out of order or range"));
            }
            if owner[r] {
                return mismatch(format!("row {r} is both windowed and residual"));
            }
            if a.row_nnz(r) == 0 {
                return mismatch(format!("residual row {r} is empty"));
            }
            owner[r] = true;
            prev = Some(r);
        }
        if let Some(r) = (0..n).find(|&r| a.row_nnz(r) > 0 && !owner[r]) {
            return mismatch(format!("row {r} is assigned to neither path"));
        }
        Ok(())
    }
}

/// Reusable "seen" marks over the column space.
struct ColumnMarks {
    stamp: Vec<u32>,
    generation: u32,
}

impl ColumnMarks {
    fn new(n_cols: usize) -> Self {
        Self { stamp: vec![0; n_cols], generation: 0 }
    }

    fn reset(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.generation = 1;
        }
    }

    /// Marks `c`; returns true when it was not yet marked.
    #[inline]
    fn mark(&mut self, c: usize) -> bool {
        let fresh = self.stamp[c] != self.generation;
        self.stamp[c] = self.generation;
        fresh
    }

    #[inline]
    fn is_marked(&self, c: usize) -> bool {
        self.stamp[c] == self.generation
    }
}

fn increment_with(a: &CsrMatrix, r: usize, w: usize, marks: &mut ColumnMarks) -> usize {
    marks.reset();
    for u in r + 1..r + w.max(1) {
        for &c in a.row_cols(u) {
            marks.mark(c);
        }
    }
    a.row_cols(r).iter().filter(|&&c| !marks.is_marked(c)).count()
}

/// Number of distinct columns row `r` adds to rows `r+1 .. r+w-1`.
pub fn column_increment(a: &CsrMatrix, r: usize, w: usize) -> usize {
    let mut marks = ColumnMarks::new(a.n_cols());
    increment_with(a, r, w, &mut marks)
}

/// Distinct columns touched by a window, in ascending order.
pub fn window_columns(a: &CsrMatrix, start: usize, rows: usize) -> Vec<usize> {
    let mut cols: Vec<usize> = (start..start + rows).flat_map(|r| a.row_cols(r).iter().copied()).collect();
    cols.sort_unstable();
    cols.dedup();
    cols
}

/// `ceil(distinct window columns / 8)`.
pub fn projected_blocks(a: &CsrMatrix, w: &Window) -> usize {
    window_columns(a, w.start, w.rows).len().div_ceil(BLOCK_DIM)
}

/// Scans the rows once and assigns each non-empty row to a window or to the
/// residual set.
pub fn partition_rows(a: &CsrMatrix, p: &PartitionParams) -> Result<PartitionPlan, PartitionError> {
    p.validate()?;
    let (tau_nnz, tau_inc) = p.resolve(a);
    let n = a.n_rows();
    let w = p.window_size;
    let mut marks = ColumnMarks::new(a.n_cols());
    let mut plan = PartitionPlan::default();
    let mut r = 0;
    while r < n {
        let nz = a.row_nnz(r);
        if nz == 0 {
            r += 1;
            continue;
        }
        // short rows are the only candidates, so skip the set work for long ones
        if nz <= tau_nnz && increment_with(a, r, w, &mut marks) < tau_inc {
            plan.residual_rows.push(r);
            r += 1;
        } else {
            let rows = w.min(n - r);
            plan.windows.push(Window { start: r, rows, segments: None });
            r += w;
        }
    }
    Ok(plan)
}

/// Annotates windows whose block count exceeds the work-item bound (and,
/// when enabled, windows holding super-long rows) with block-range segments.
/// Row membership is left untouched.
pub fn split_long_work(
    a: &CsrMatrix,
    plan: &PartitionPlan,
    p: &PartitionParams,
) -> Result<PartitionPlan, PartitionError> {
    p.validate()?;
    let mean = a.nnz() as f64 / a.n_rows().max(1) as f64;
    let windows = plan
        .windows
        .par_iter()
        .map(|w| {
            let blocks = projected_blocks(a, w);
            let mut seg_len = p.max_blocks_per_item.unwrap_or(usize::MAX);
            if p.split_long_rows && blocks > 1 {
                let longest = w.row_range().map(|r| a.row_nnz(r)).max().unwrap_or(0);
                let limit = p.split_factor * mean;
                if longest as f64 > limit {
                    let pieces = (longest as f64 / limit).ceil() as usize;
                    seg_len = seg_len.min(blocks.div_ceil(pieces));
                }
            }
            let segments = (blocks > seg_len)
                .then(|| (0..blocks).step_by(seg_len).map(|b| Segment(b, (b + seg_len).min(blocks))).collect());
            Window { start: w.start, rows: w.rows, segments }
        })
        .collect();
    Ok(PartitionPlan { windows, residual_rows: plan.residual_rows.clone() })
}
