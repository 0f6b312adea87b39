use rayon::prelude::*;

use super::similarity::inverted_index;
use crate::sparse::CsrMatrix;

/// For every row, the rows sharing at least one column with it. Lists longer
/// than `max_candidates` keep the rows with the largest column overlap
/// (ties: lower row index). Each list is sorted by that rank.
pub fn build_candidates(a: &CsrMatrix, max_candidates: usize) -> Vec<Vec<usize>> {
    let (ptr, col_rows) = inverted_index(a);
    let n = a.n_rows();
    (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0u32; n], Vec::new()),
            |(overlap, touched), r| {
                for &c in a.row_cols(r) {
                    for &u in &col_rows[ptr[c]..ptr[c + 1]] {
                        if u != r {
                            if overlap[u] == 0 {
                                touched.push(u);
                            }
                            overlap[u] += 1;
                        }
                    }
                }
                let mut ranked: Vec<(u32, usize)> = touched.iter().map(|&u| (overlap[u], u)).collect();
                for &u in touched.iter() {
                    overlap[u] = 0;
                }
                touched.clear();
                ranked.sort_unstable_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
                ranked.truncate(max_candidates);
                ranked.into_iter().map(|(_, u)| u).collect()
            },
        )
        .collect()
}
