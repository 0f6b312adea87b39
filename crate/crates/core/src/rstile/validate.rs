use std::fmt;

use serde::{Deserialize, Serialize};

use super::{RsTileMatrix, MAX_INDEX};
use crate::partition::BLOCK_DIM;

/// One broken format invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

fn v(invariant: &'static str, detail: impl Into<String>) -> Violation {
    Violation { invariant, detail: detail.into() }
}

fn check_prefix(name: &'static str, offsets: &[u32], entries: usize, total: usize, out: &mut Vec<Violation>) -> bool {
    if offsets.len() != entries + 1 {
        out.push(v(name, format!("length {} but {} entries", offsets.len(), entries)));
        return false;
    }
    if offsets[0] != 0 {
        out.push(v(name, format!("first offset is {}", offsets[0])));
        return false;
    }
    if let Some(i) = offsets.windows(2).position(|p| p[1] < p[0]) {
        out.push(v(name, format!("offsets decrease at entry {i}")));
        return false;
    }
    if offsets[entries] as usize != total {
        out.push(v(name, format!("last offset {} but {} items", offsets[entries], total)));
        return false;
    }
    true
}

/// Checks every structural invariant of `m`; an empty list means valid.
pub fn validate(m: &RsTileMatrix) -> Vec<Violation> {
    let mut out = Vec::new();
    if m.window_size == 0 || m.window_size > BLOCK_DIM {
        out.push(v("window_size", format!("{} outside 1..={BLOCK_DIM}", m.window_size)));
        return out;
    }
    if m.n_rows > MAX_INDEX || m.n_cols > MAX_INDEX {
        out.push(v("dimensions", format!("{}x{} exceeds 32-bit index range", m.n_rows, m.n_cols)));
        return out;
    }
    validate_tc(m, &mut out);
    validate_residual(m, &mut out);
    out
}

fn validate_tc(m: &RsTileMatrix, out: &mut Vec<Violation>) {
    let tc = &m.tc;
    let blocks = tc.bitmaps.len();
    if !check_prefix("row_window_offset", &tc.row_window_offset, tc.row_window_id.len(), blocks, out) {
        return;
    }
    if tc.col_id.len() != blocks * BLOCK_DIM {
        out.push(v("col_id_length", format!("{} column ids for {} blocks", tc.col_id.len(), blocks)));
        return;
    }
    if let Some(i) = tc.col_id.iter().position(|&c| c as usize >= m.n_cols) {
        out.push(v("col_id_range", format!("block {} column {} >= n_cols {}", i / BLOCK_DIM, tc.col_id[i], m.n_cols)));
    }

    let mut counted = 0usize;
    for (t, b) in tc.bitmaps.iter().enumerate() {
        counted += b.count_ones() as usize;
        if counted > tc.values.len() {
            out.push(v("popcount_values", format!("block {t} needs values past the end ({} stored)", tc.values.len())));
            break;
        }
    }
    if counted < tc.values.len() {
        out.push(v(
            "popcount_values",
            format!(
                "bitmaps account for {counted} values but {} are stored (block {})",
                tc.values.len(),
                blocks.saturating_sub(1)
            ),
        ));
    }

    let mut prev_end: Option<usize> = None;
    for range in tc.logical_windows() {
        let start = tc.row_window_id[range.start] as usize;
        if start >= m.n_rows {
            out.push(v("row_window_id", format!("window start {start} >= n_rows {}", m.n_rows)));
            continue;
        }
        if prev_end.is_some_and(|e| start < e) {
            out.push(v("row_window_id", format!("window at row {start} overlaps or precedes its predecessor")));
        }
        let rows = m.window_rows(start);
        prev_end = Some(rows.end);

        let block_range = tc.row_window_offset[range.start] as usize..tc.row_window_offset[range.end] as usize;
        let mut last_col: Option<u32> = None;
        for t in block_range {
            let bits = tc.bitmaps[t];
            let row_limit = rows.len();
            if row_limit < BLOCK_DIM && bits >> (row_limit * BLOCK_DIM) != 0 {
                out.push(v("bitmap_rows", format!("block {t} sets bits past row {}", rows.end - 1)));
            }
            for lc in 0..BLOCK_DIM {
                let column_mask = 0x0101_0101_0101_0101u64 << lc;
                if bits & column_mask == 0 {
                    continue;
                }
                let c = tc.col_id[t * BLOCK_DIM + lc];
                if last_col.is_some_and(|p| p >= c) {
                    out.push(v(
                        "window_columns",
                        format!("block {t} repeats or reorders column {c} in window at row {start}"),
                    ));
                }
                last_col = Some(c);
            }
        }
    }
}

fn validate_residual(m: &RsTileMatrix, out: &mut Vec<Violation>) {
    let res = &m.residual;
    if res.values.len() != res.col_id.len() {
        out.push(v("residual_values", format!("{} values for {} column ids", res.values.len(), res.col_id.len())));
        return;
    }
    if !check_prefix("row_nnz_offset", &res.row_nnz_offset, res.row_id.len(), res.col_id.len(), out) {
        return;
    }
    let windows: Vec<std::ops::Range<usize>> =
        m.tc.logical_windows().iter().map(|r| m.window_rows(m.tc.row_window_id[r.start] as usize)).collect();
    for (i, &r) in res.row_id.iter().enumerate() {
        let r = r as usize;
        if r >= m.n_rows {
            out.push(v("residual_row_id", format!("row {r} >= n_rows {}", m.n_rows)));
            continue;
        }
        if i > 0 && res.row_id[i - 1] as usize >= r {
            out.push(v("residual_row_id", format!("row ids not strictly increasing at {r}")));
        }
        let (cols, _) = res.row_entries(i);
        if cols.is_empty() {
            out.push(v("residual_empty_row", format!("row {r} has no entries")));
        }
        if let Some(&c) = cols.iter().find(|&&c| c as usize >= m.n_cols) {
            out.push(v("residual_col_id", format!("row {r} column {c} >= n_cols {}", m.n_cols)));
        }
        if cols.windows(2).any(|p| p[1] <= p[0]) {
            out.push(v("residual_col_id", format!("row {r} columns not strictly increasing")));
        }
        let k = windows.partition_point(|w| w.end <= r);
        if k < windows.len() && windows[k].contains(&r) {
            out.push(v("disjoint_parts", format!("row {r} is covered by the window at row {}", windows[k].start)));
        }
    }
}
