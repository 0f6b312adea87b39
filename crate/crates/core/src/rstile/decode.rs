use super::{validate, FormatError, RsTileMatrix, Violation};
use crate::partition::BLOCK_DIM;
use crate::sparse::CsrMatrix;

/// Reconstructs the CSR matrix encoded by `m`.
pub fn decode_rstile(m: &RsTileMatrix) -> Result<CsrMatrix, FormatError> {
    if let Some(first) = validate(m).into_iter().next() {
        return Err(FormatError::Corrupt(first));
    }
    let tc = &m.tc;
    let mut triplets = Vec::with_capacity(m.nnz());
    let mut next_value = 0usize;
    for range in tc.logical_windows() {
        let start = tc.row_window_id[range.start] as usize;
        let blocks = tc.row_window_offset[range.start] as usize..tc.row_window_offset[range.end] as usize;
        for t in blocks {
            let mut bits = tc.bitmaps[t];
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let row = start + b / BLOCK_DIM;
                let col = tc.col_id[t * BLOCK_DIM + b % BLOCK_DIM] as usize;
                triplets.push((row, col, tc.values[next_value]));
                next_value += 1;
            }
        }
    }
    for i in 0..m.residual.row_count() {
        let r = m.residual.row_id[i] as usize;
        let (cols, vals) = m.residual.row_entries(i);
        triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| (r, c as usize, v)));
    }
    let out = CsrMatrix::from_triplets(m.n_rows, m.n_cols, &triplets)
        .map_err(|e| FormatError::Corrupt(Violation { invariant: "decode", detail: e.to_string() }))?;
    if out.nnz() != triplets.len() {
        return Err(FormatError::Corrupt(Violation {
            invariant: "decode",
            detail: "duplicate coordinates across parts".into(),
        }));
    }
    Ok(out)
}
