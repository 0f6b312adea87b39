use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ReorderError;
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnWeights {
    /// `d_j^-alpha` per column, 0 for columns no row touches.
    pub weights: Vec<f64>,
    pub alpha: f64,
}

pub fn column_weights(a: &CsrMatrix, alpha: f64) -> Result<ColumnWeights, ReorderError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ReorderError::Params(format!("alpha must be positive, got {alpha}")));
    }
    let weights = a.column_degrees().into_iter().map(|d| if d == 0 { 0.0 } else { (d as f64).powf(-alpha) }).collect();
    Ok(ColumnWeights { weights, alpha })
}

/// Weighted Jaccard similarity of rows `r` and `u`. Two empty rows are
/// interchangeable (1.0); an empty row against a non-empty one gives 0.0.
pub fn w_jaccard(a: &CsrMatrix, w: &ColumnWeights, r: usize, u: usize) -> f64 {
    let (x, y) = (a.row_cols(r), a.row_cols(u));
    if x.is_empty() && y.is_empty() {
        return 1.0;
    }
    let (mut i, mut j) = (0, 0);
    let (mut inter, mut union) = (0.0f64, 0.0f64);
    while i < x.len() && j < y.len() {
        let (cx, cy) = (x[i], y[j]);
        if cx == cy {
            inter += w.weights[cx];
            union += w.weights[cx];
            i += 1;
            j += 1;
        } else if cx < cy {
            union += w.weights[cx];
            i += 1;
        } else {
            union += w.weights[cy];
            j += 1;
        }
    }
    union += x[i..].iter().map(|&c| w.weights[c]).sum::<f64>();
    union += y[j..].iter().map(|&c| w.weights[c]).sum::<f64>();
    if union == 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// A symmetric similarity in `[0, 1]` over the rows of a matrix.
pub trait RowSimilarity: Sync {
    fn n_rows(&self) -> usize;

    fn sim(&self, r: usize, u: usize) -> f64;

    /// Every row that may have positive similarity with `r` (excluding `r`),
    /// or `None` when any row might.
    fn related(&self, _r: usize) -> Option<Vec<usize>> {
        None
    }
}

/// Cumulative adjacent dissimilarity of a row order.
pub fn objective<S: RowSimilarity + ?Sized>(s: &S, order: &[usize]) -> f64 {
    order.windows(2).map(|p| 1.0 - s.sim(p[0], p[1])).sum()
}

/// w-Jaccard over a matrix, with a column → rows index for `related`.
pub struct WeightedJaccard<'a> {
    a: &'a CsrMatrix,
    w: &'a ColumnWeights,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    empty_rows: Vec<usize>,
}

impl<'a> WeightedJaccard<'a> {
    pub fn new(a: &'a CsrMatrix, w: &'a ColumnWeights) -> Self {
        let (col_ptr, col_rows) = inverted_index(a);
        let empty_rows = (0..a.n_rows()).filter(|&r| a.row_nnz(r) == 0).collect();
        Self { a, w, col_ptr, col_rows, empty_rows }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        self.a
    }

    /// Rows holding column `c`, ascending.
    pub fn column_rows(&self, c: usize) -> &[usize] {
        &self.col_rows[self.col_ptr[c]..self.col_ptr[c + 1]]
    }
}

/// Column-major row lists: rows of column `c` are `rows[ptr[c]..ptr[c+1]]`.
pub(crate) fn inverted_index(a: &CsrMatrix) -> (Vec<usize>, Vec<usize>) {
    let mut ptr = vec![0usize; a.n_cols() + 1];
    for &c in a.col_idx() {
        ptr[c + 1] += 1;
    }
    for c in 0..a.n_cols() {
        ptr[c + 1] += ptr[c];
    }
    let mut next = ptr.clone();
    let mut rows = vec![0usize; a.nnz()];
    for r in 0..a.n_rows() {
        for &c in a.row_cols(r) {
            rows[next[c]] = r;
            next[c] += 1;
        }
    }
    (ptr, rows)
}

impl RowSimilarity for WeightedJaccard<'_> {
    fn n_rows(&self) -> usize {
        self.a.n_rows()
    }

    fn sim(&self, r: usize, u: usize) -> f64 {
        w_jaccard(self.a, self.w, r, u)
    }

    fn related(&self, r: usize) -> Option<Vec<usize>> {
        let cols = self.a.row_cols(r);
        let mut out: Vec<usize> = if cols.is_empty() {
            self.empty_rows.clone()
        } else {
            cols.iter().flat_map(|&c| self.column_rows(c).iter().copied()).collect()
        };
        out.sort_unstable();
        out.dedup();
        out.retain(|&u| u != r);
        Some(out)
    }
}

/// Explicit symmetric similarity matrix, for hand-built instances.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityTable {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityTable {
    /// `n` rows, self-similarity 1 and every other pair 0.
    pub fn new(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn set(&mut self, r: usize, u: usize, s: f64) {
        self.data[r * self.n + u] = s;
        self.data[u * self.n + r] = s;
    }

    /// Full pairwise table of `s`.
    pub fn from_similarity<S: RowSimilarity>(s: &S) -> Self {
        let n = s.n_rows();
        let data = (0..n * n).into_par_iter().map(|i| s.sim(i / n, i % n)).collect();
        Self { n, data }
    }
}

impl RowSimilarity for SimilarityTable {
    fn n_rows(&self) -> usize {
        self.n
    }

    fn sim(&self, r: usize, u: usize) -> f64 {
        self.data[r * self.n + u]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(supports: &[&[usize]], n_cols: usize) -> CsrMatrix {
        let t: Vec<_> = supports.iter().enumerate().flat_map(|(r, s)| s.iter().map(move |&c| (r, c, 1.0))).collect();
        CsrMatrix::from_triplets(supports.len(), n_cols, &t).unwrap()
    }

    #[test]
    fn weights_follow_degree() {
        // column 0 in one row, column 1 in four rows
        let a = rows(&[&[0, 1], &[1], &[1], &[1]], 3);
        let w = column_weights(&a, 1.0).unwrap();
        assert_eq!(w.weights, vec![1.0, 0.25, 0.0]);
        let w = column_weights(&a, 0.5).unwrap();
        assert_eq!(w.weights[1], 0.5);
        assert!(column_weights(&a, 0.0).is_err());
        assert!(column_weights(&a, -1.0).is_err());
    }

    #[test]
    fn jaccard_by_hand() {
        // S0 = {c1, c2}, S1 = {c2, c3}; c2 also in row 2 so d = {1, 2, 1}
        let a = rows(&[&[1, 2], &[2, 3], &[]], 4);
        let w = column_weights(&a, 1.0).unwrap();
        assert!((w_jaccard(&a, &w, 0, 1) - 0.2).abs() < 1e-15);
        assert_eq!(w_jaccard(&a, &w, 0, 0), 1.0);
        assert_eq!(w_jaccard(&a, &w, 0, 2), 0.0);
        assert_eq!(w_jaccard(&a, &w, 2, 2), 1.0);
    }

    #[test]
    fn disjoint_rows_are_dissimilar() {
        let a = rows(&[&[0], &[1]], 2);
        let w = column_weights(&a, 0.5).unwrap();
        assert_eq!(w_jaccard(&a, &w, 0, 1), 0.0);
    }

    #[test]
    fn related_covers_shared_columns() {
        let a = rows(&[&[1, 2], &[2, 3], &[4], &[], &[]], 5);
        let w = column_weights(&a, 0.5).unwrap();
        let s = WeightedJaccard::new(&a, &w);
        assert_eq!(s.related(0), Some(vec![1]));
        assert_eq!(s.related(2), Some(vec![]));
        assert_eq!(s.related(3), Some(vec![4]));
    }

    #[test]
    fn objective_of_path() {
        let mut t = SimilarityTable::new(3);
        t.set(0, 1, 0.9);
        t.set(1, 2, 0.8);
        assert!((objective(&t, &[0, 1, 2]) - 0.3).abs() < 1e-12);
    }
}
