use serde::{Deserialize, Serialize};

use super::SparseError;

/// Compressed sparse row matrix with `f32` values.
///
/// Canonical form: `row_ptr[0] == 0`, `row_ptr` non-decreasing, and the
/// column indices of every row strictly increasing and `< n_cols`. All
/// constructors enforce this, so code holding a `CsrMatrix` may rely on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f32>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, checking every canonical-form invariant.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f32>,
    ) -> Result<Self, SparseError> {
        if row_ptr.len() != n_rows + 1 {
            return Err(SparseError::Invalid(format!("row_ptr has length {}, expected {}", row_ptr.len(), n_rows + 1)));
        }
        if row_ptr[0] != 0 {
            return Err(SparseError::Invalid("row_ptr[0] must be 0".into()));
        }
        if col_idx.len() != values.len() {
            return Err(SparseError::Invalid(format!(
                "col_idx has length {} but values has length {}",
                col_idx.len(),
                values.len()
            )));
        }
        if row_ptr[n_rows] != col_idx.len() {
            return Err(SparseError::Invalid(format!(
                "row_ptr[n_rows] = {} but nnz = {}",
                row_ptr[n_rows],
                col_idx.len()
            )));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_ptr[r], row_ptr[r + 1]);
            if hi < lo {
                return Err(SparseError::Invalid(format!("row_ptr decreases at row {r}")));
            }
            let cols = &col_idx[lo..hi];
            for (i, &c) in cols.iter().enumerate() {
                if c >= n_cols {
                    return Err(SparseError::Invalid(format!(
                        "column {c} out of range in row {r} (n_cols = {n_cols})"
                    )));
                }
                if i > 0 && cols[i - 1] >= c {
                    return Err(SparseError::Invalid(format!("columns of row {r} are not strictly increasing")));
                }
            }
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, values })
    }

    /// Builds a canonical matrix from unordered `(row, col, value)` triplets.
    /// Duplicate coordinates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f32)]) -> Result<Self, SparseError> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(SparseError::Invalid(format!("entry ({r}, {c}) outside {n_rows}x{n_cols}")));
            }
            counts[r + 1] += 1;
        }
        for r in 0..n_rows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0f32; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f32)> = Vec::new();
        for r in 0..n_rows {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|i| (cols[i], vals[i])));
            // stable sort keeps file order for duplicates, so sums are reproducible
            scratch.sort_by_key(|&(c, _)| c);
            for &(c, v) in &scratch {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, values })
    }

    /// The `n × n` identity.
    pub fn identity(n: usize) -> Self {
        Self { n_rows: n, n_cols: n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    /// An all-zero matrix with the given shape.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, row_ptr: vec![0; n_rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Number of stored entries in row `r`. Rows past the end count as empty.
    #[inline]
    pub fn row_nnz(&self, r: usize) -> usize {
        if r >= self.n_rows {
            0
        } else {
            self.row_ptr[r + 1] - self.row_ptr[r]
        }
    }

    /// Column indices of row `r` (empty past the end of the matrix).
    #[inline]
    pub fn row_cols(&self, r: usize) -> &[usize] {
        if r >= self.n_rows {
            &[]
        } else {
            &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
        }
    }

    #[inline]
    pub fn row_values(&self, r: usize) -> &[f32] {
        if r >= self.n_rows {
            &[]
        } else {
            &self.values[self.row_ptr[r]..self.row_ptr[r + 1]]
        }
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f32)> + '_ {
        (0..self.n_rows)
            .flat_map(move |r| self.row_cols(r).iter().zip(self.row_values(r)).map(move |(&c, &v)| (r, c, v)))
    }

    /// Number of rows holding each column.
    pub fn column_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_cols];
        for &c in &self.col_idx {
            deg[c] += 1;
        }
        deg
    }

    /// Returns `A[order, :]`: output row `i` is input row `order[i]`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self, SparseError> {
        check_permutation(order, self.n_rows)?;
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        row_ptr.push(0);
        for &src in order {
            col_idx.extend_from_slice(self.row_cols(src));
            values.extend_from_slice(self.row_values(src));
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n_rows: self.n_rows, n_cols: self.n_cols, row_ptr, col_idx, values })
    }

    /// Dense row-major expansion, mostly useful for tests.
    pub fn to_dense(&self) -> super::DenseMatrix {
        let mut d = super::DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.iter() {
            d.set(r, c, v);
        }
        d
    }
}

/// Checks that `order` is a bijection on `[0, n)`.
pub fn check_permutation(order: &[usize], n: usize) -> Result<(), SparseError> {
    if order.len() != n {
        return Err(SparseError::Invalid(format!("permutation has length {}, expected {n}", order.len())));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(SparseError::Invalid(format!("permutation is not a bijection (index {i})")));
        }
        seen[i] = true;
    }
    Ok(())
}
