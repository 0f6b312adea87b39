use serde::{Deserialize, Serialize};

use super::{CsrMatrix, SparseError};

/// Coordinate-list matrix. Canonical after [`CooMatrix::canonicalize`]:
/// entries sorted row-major with no repeated coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CooMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub entries: Vec<(usize, usize, f32)>,
}

impl CooMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f32) {
        self.entries.push((row, col, value));
    }

    /// Sorts entries and sums duplicates in place.
    pub fn canonicalize(&mut self) -> Result<(), SparseError> {
        let csr = self.to_csr()?;
        *self = Self::from(&csr);
        Ok(())
    }

    pub fn to_csr(&self) -> Result<CsrMatrix, SparseError> {
        CsrMatrix::from_triplets(self.n_rows, self.n_cols, &self.entries)
    }
}

impl From<&CsrMatrix> for CooMatrix {
    fn from(m: &CsrMatrix) -> Self {
        Self { n_rows: m.n_rows(), n_cols: m.n_cols(), entries: m.iter().collect() }
    }
}
