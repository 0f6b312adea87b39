use rayon::prelude::*;

use super::{FormatError, ResidualPart, RsTileMatrix, TcPart, MAX_INDEX};
use crate::partition::{window_columns, PartitionError, PartitionPlan, Segment, BLOCK_DIM};
use crate::sparse::CsrMatrix;

/// Padding column for unused slots of a window's last block.
const PAD_COLUMN: u32 = 0;

struct WindowTiles {
    bitmaps: Vec<u64>,
    col_id: Vec<u32>,
    values: Vec<f32>,
}

fn tile_window(a: &CsrMatrix, start: usize, rows: usize) -> WindowTiles {
    let cols = window_columns(a, start, rows);
    let n_blocks = cols.len().div_ceil(BLOCK_DIM);
    let mut col_id: Vec<u32> = cols.iter().map(|&c| c as u32).collect();
    col_id.resize(n_blocks * BLOCK_DIM, PAD_COLUMN);

    let mut bitmaps = vec![0u64; n_blocks];
    let mut per_block: Vec<Vec<f32>> = vec![Vec::new(); n_blocks];
    // rows ascending, columns ascending: each block's list fills in bit order
    for local_row in 0..rows {
        let r = start + local_row;
        for (&c, &v) in a.row_cols(r).iter().zip(a.row_values(r)) {
            let pos = cols.binary_search(&c).expect("column gathered from this window");
            let (block, local_col) = (pos / BLOCK_DIM, pos % BLOCK_DIM);
            bitmaps[block] |= 1u64 << (local_row * BLOCK_DIM + local_col);
            per_block[block].push(v);
        }
    }
    WindowTiles { bitmaps, col_id, values: per_block.concat() }
}

fn check_size(what: &str, v: usize) -> Result<(), FormatError> {
    if v > MAX_INDEX {
        return Err(FormatError::TooLarge(format!("{what} = {v}")));
    }
    Ok(())
}

/// Encodes `a` under `plan` (windows of at most `window_size` rows).
pub fn build_rstile(a: &CsrMatrix, plan: &PartitionPlan, window_size: usize) -> Result<RsTileMatrix, FormatError> {
    check_size("n_rows", a.n_rows())?;
    check_size("n_cols", a.n_cols())?;
    check_size("nnz", a.nnz())?;
    if window_size == 0 || window_size > BLOCK_DIM {
        return Err(PartitionError::Params(format!("window_size {window_size} outside 1..={BLOCK_DIM}")).into());
    }
    plan.check(a, window_size)?;
    if let Some(w) = plan.windows.iter().find(|w| w.rows != window_size.min(a.n_rows() - w.start)) {
        return Err(PartitionError::Mismatch(format!(
            "window at row {} holds {} rows; only the last window may be short",
            w.start, w.rows
        ))
        .into());
    }

    let tiles: Vec<WindowTiles> = plan.windows.par_iter().map(|w| tile_window(a, w.start, w.rows)).collect();

    let mut tc = TcPart::default();
    tc.row_window_offset.push(0);
    let mut base = 0u32;
    for (w, t) in plan.windows.iter().zip(tiles) {
        let n_blocks = t.bitmaps.len();
        let whole = [Segment(0, n_blocks)];
        let segments = w.segments.as_deref().unwrap_or(&whole);
        for s in segments {
            tc.row_window_id.push(w.start as u32);
            tc.row_window_offset.push(base + s.1 as u32);
        }
        base += n_blocks as u32;
        tc.bitmaps.extend(t.bitmaps);
        tc.col_id.extend(t.col_id);
        tc.values.extend(t.values);
    }

    let mut residual = ResidualPart::default();
    for &r in &plan.residual_rows {
        residual.row_id.push(r as u32);
        residual.col_id.extend(a.row_cols(r).iter().map(|&c| c as u32));
        residual.values.extend_from_slice(a.row_values(r));
        residual.row_nnz_offset.push(residual.col_id.len() as u32);
    }

    Ok(RsTileMatrix { n_rows: a.n_rows(), n_cols: a.n_cols(), window_size, tc, residual })
}
