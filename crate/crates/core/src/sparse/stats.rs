use serde::{Deserialize, Serialize};

use super::CsrMatrix;

/// Row-length profile: mean, maximum and the share of rows that are
/// more than two or four times longer than the mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowStats {
    pub n_rows: usize,
    pub n_cols: usize,
    pub nnz: usize,
    pub nnz_mean: f64,
    pub nnz_max: usize,
    pub long_row_ratio_2x: f64,
    pub long_row_ratio_4x: f64,
    pub per_row_nnz: Vec<usize>,
}

pub fn row_stats(a: &CsrMatrix) -> RowStats {
    let per_row_nnz: Vec<usize> = (0..a.n_rows()).map(|r| a.row_nnz(r)).collect();
    let n = a.n_rows();
    let nnz_mean = if n == 0 { 0.0 } else { a.nnz() as f64 / n as f64 };
    let ratio = |factor: f64| {
        if n == 0 {
            0.0
        } else {
            per_row_nnz.iter().filter(|&&k| k as f64 > factor * nnz_mean).count() as f64 / n as f64
        }
    };
    RowStats {
        n_rows: n,
        n_cols: a.n_cols(),
        nnz: a.nnz(),
        nnz_mean,
        nnz_max: per_row_nnz.iter().copied().max().unwrap_or(0),
        long_row_ratio_2x: ratio(2.0),
        long_row_ratio_4x: ratio(4.0),
        per_row_nnz,
    }
}
