use rayon::prelude::*;

use super::{CsrMatrix, DenseMatrix, SparseError};

/// Reference `C = A × B`: straightforward row-by-row accumulation in `f64`,
/// rounded to `f32` on store.
pub fn oracle_spmm(a: &CsrMatrix, b: &DenseMatrix) -> Result<DenseMatrix, SparseError> {
    if a.n_cols() != b.n_rows() {
        return Err(SparseError::DimensionMismatch(format!(
            "A is {}x{} but B is {}x{}",
            a.n_rows(),
            a.n_cols(),
            b.n_rows(),
            b.n_cols()
        )));
    }
    let d = b.n_cols();
    let mut out = vec![0f32; a.n_rows() * d];
    if d > 0 {
        out.par_chunks_mut(d).enumerate().for_each(|(r, c_row)| {
            let mut acc = vec![0f64; d];
            for (&k, &v) in a.row_cols(r).iter().zip(a.row_values(r)) {
                let v = v as f64;
                for (s, &x) in acc.iter_mut().zip(b.row(k)) {
                    *s += v * x as f64;
                }
            }
            for (o, s) in c_row.iter_mut().zip(acc) {
                *o = s as f32;
            }
        });
    }
    DenseMatrix::from_vec(a.n_rows(), d, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_b() {
        let b = DenseMatrix::random_uniform(5, 3, 1);
        assert_eq!(oracle_spmm(&CsrMatrix::identity(5), &b).unwrap(), b);
    }

    #[test]
    fn zero_matrix_annihilates() {
        let b = DenseMatrix::random_uniform(4, 2, 1);
        let c = oracle_spmm(&CsrMatrix::zeros(3, 4), &b).unwrap();
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        let b = DenseMatrix::from_vec(2, 2, vec![1.0; 4]).unwrap();
        let c = oracle_spmm(&a, &b).unwrap();
        assert_eq!(c.data(), &[2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let b = DenseMatrix::zeros(3, 2);
        assert!(matches!(oracle_spmm(&CsrMatrix::identity(2), &b), Err(SparseError::DimensionMismatch(_))));
    }
}
