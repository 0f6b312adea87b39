//! The RS-Tile format.
//!
//! A matrix is split into two disjoint parts. The tensor-core part holds row
//! windows: each window's distinct columns are compacted into a contiguous
//! space and cut into 8×8 blocks, every block stored as a 64-bit occupancy
//! bitmap, its 8 original column ids and its nonzero values in bit order.
//! The residual part holds the remaining short rows as plain
//! `(row id, columns, values)` lists.
//!
//! Bit `b` of a block bitmap is local row `b / 8`, local column `b % 8`
//! (bit 0 is the least significant bit). Column slots past a window's last
//! distinct column are padded with column 0 and their bits stay unset.

mod build;
mod decode;
mod io;
mod storage;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::partition::PartitionError;

pub use build::build_rstile;
pub use decode::decode_rstile;
pub use io::{read_rstile, write_rstile, HEADER_LEN};
pub use storage::{storage_report, StorageReport};
pub use validate::{validate, Violation};

/// Largest dimension or entry count the 32-bit index arrays accept.
pub const MAX_INDEX: usize = i32::MAX as usize;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Plan(#[from] PartitionError),
    #[error("matrix too large for 32-bit indices: {0}")]
    TooLarge(String),
    #[error("corrupt RS-Tile data: {0}")]
    Corrupt(Violation),
    #[error("malformed RS-Tile file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TcPart {
    /// First global row of each window entry. Split segments of one window
    /// repeat its id in consecutive entries.
    pub row_window_id: Vec<u32>,
    /// Block-offset prefix sums, one more than the entry count.
    pub row_window_offset: Vec<u32>,
    pub bitmaps: Vec<u64>,
    /// Original column ids, 8 per block.
    pub col_id: Vec<u32>,
    /// Nonzeros, block by block in ascending bit order.
    pub values: Vec<f32>,
}

impl TcPart {
    pub fn entry_count(&self) -> usize {
        self.row_window_id.len()
    }

    pub fn block_count(&self) -> usize {
        self.bitmaps.len()
    }

    /// Block index range of window entry `e`.
    pub fn entry_blocks(&self, e: usize) -> std::ops::Range<usize> {
        self.row_window_offset[e] as usize..self.row_window_offset[e + 1] as usize
    }

    /// Starting position in `values` of every block, plus the total.
    pub fn block_value_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.bitmaps.len() + 1);
        let mut acc = 0usize;
        out.push(0);
        for b in &self.bitmaps {
            acc += b.count_ones() as usize;
            out.push(acc);
        }
        out
    }

    /// Groups consecutive entries sharing a row window id. Each item is the
    /// entry range of one logical window.
    pub fn logical_windows(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut e = 0;
        while e < self.row_window_id.len() {
            let id = self.row_window_id[e];
            let mut f = e + 1;
            while f < self.row_window_id.len() && self.row_window_id[f] == id {
                f += 1;
            }
            out.push(e..f);
            e = f;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualPart {
    pub row_id: Vec<u32>,
    /// Prefix sums over the residual rows' entry counts.
    pub row_nnz_offset: Vec<u32>,
    pub col_id: Vec<u32>,
    pub values: Vec<f32>,
}

impl Default for ResidualPart {
    fn default() -> Self {
        Self { row_id: Vec::new(), row_nnz_offset: vec![0], col_id: Vec::new(), values: Vec::new() }
    }
}

impl ResidualPart {
    pub fn row_count(&self) -> usize {
        self.row_id.len()
    }

    pub fn nnz(&self) -> usize {
        self.col_id.len()
    }

    pub fn row_entries(&self, i: usize) -> (&[u32], &[f32]) {
        let (lo, hi) = (self.row_nnz_offset[i] as usize, self.row_nnz_offset[i + 1] as usize);
        (&self.col_id[lo..hi], &self.values[lo..hi])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsTileMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub window_size: usize,
    pub tc: TcPart,
    pub residual: ResidualPart,
}

impl RsTileMatrix {
    /// Row range covered by a window starting at `start`.
    pub fn window_rows(&self, start: usize) -> std::ops::Range<usize> {
        start..(start + self.window_size).min(self.n_rows)
    }

    pub fn tc_nnz(&self) -> usize {
        self.tc.values.len()
    }

    pub fn nnz(&self) -> usize {
        self.tc.values.len() + self.residual.values.len()
    }
}
