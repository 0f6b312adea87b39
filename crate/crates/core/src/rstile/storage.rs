use serde::{Deserialize, Serialize};

use super::RsTileMatrix;
use crate::partition::BLOCK_DIM;
use crate::sparse::CsrMatrix;

const IDX: usize = 4;
const VAL: usize = 4;
const BITMAP: usize = 8;

/// Byte footprint of COO, CSR and RS-Tile encodings of the same matrix,
/// with 32-bit indices and values throughout. The RS-Tile total equals the
/// payload of the serialized file (header excluded).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StorageReport {
    pub coo_bytes: usize,
    pub csr_bytes: usize,
    pub rstile_bytes: usize,
    pub tc_bytes: usize,
    pub residual_bytes: usize,
    pub bitmap_bytes: usize,
    pub colid_bytes: usize,
    /// Window id and block-offset arrays of the TC part.
    pub offset_bytes: usize,
    pub tc_value_bytes: usize,
    pub normalized_to_coo: f64,
}

pub fn storage_report(a: &CsrMatrix, m: &RsTileMatrix) -> StorageReport {
    let nnz = a.nnz();
    let coo_bytes = nnz * (IDX + IDX + VAL);
    let csr_bytes = nnz * (IDX + VAL) + (a.n_rows() + 1) * IDX;

    let entries = m.tc.entry_count();
    let blocks = m.tc.block_count();
    let offset_bytes = entries * IDX + (entries + 1) * IDX;
    let bitmap_bytes = blocks * BITMAP;
    let colid_bytes = blocks * BLOCK_DIM * IDX;
    let tc_value_bytes = m.tc.values.len() * VAL;
    let tc_bytes = offset_bytes + bitmap_bytes + colid_bytes + tc_value_bytes;

    let rows = m.residual.row_count();
    let residual_bytes = rows * IDX + m.residual.nnz() * (IDX + VAL) + (rows + 1) * IDX;
    let rstile_bytes = tc_bytes + residual_bytes;
    StorageReport {
        coo_bytes,
        csr_bytes,
        rstile_bytes,
        tc_bytes,
        residual_bytes,
        bitmap_bytes,
        colid_bytes,
        offset_bytes,
        tc_value_bytes,
        normalized_to_coo: if coo_bytes == 0 { 0.0 } else { rstile_bytes as f64 / coo_bytes as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{partition_rows, PartitionParams};
    use crate::rstile::build_rstile;

    fn build(a: &CsrMatrix) -> RsTileMatrix {
        build_rstile(a, &partition_rows(a, &PartitionParams::default()).unwrap(), 8).unwrap()
    }

    #[test]
    fn empty_matrix_is_fixed_overhead() {
        let a = CsrMatrix::zeros(0, 0);
        let r = storage_report(&a, &build(&a));
        assert_eq!(r.coo_bytes, 0);
        assert_eq!(r.csr_bytes, 4);
        assert_eq!(r.tc_bytes, 4);
        assert_eq!(r.residual_bytes, 4);
        assert_eq!(r.rstile_bytes, 8);
    }

    #[test]
    fn coo_bytes_formula() {
        let t: Vec<_> = (0..1000).map(|i| (i / 10, i % 10, 1.0)).collect();
        let a = CsrMatrix::from_triplets(100, 10, &t).unwrap();
        assert_eq!(storage_report(&a, &build(&a)).coo_bytes, 12_000);
    }

    #[test]
    fn dense_eight_by_eight() {
        let t: Vec<_> = (0..64).map(|i| (i / 8, i % 8, 1.0)).collect();
        let a = CsrMatrix::from_triplets(8, 8, &t).unwrap();
        let r = storage_report(&a, &build(&a));
        assert_eq!(r.bitmap_bytes, 8);
        assert_eq!(r.colid_bytes, 32);
        assert_eq!(r.offset_bytes, 4 + 8);
        assert_eq!(r.tc_bytes, 12 + 8 + 32 + 256);
        assert_eq!(r.rstile_bytes, r.tc_bytes + r.residual_bytes);
    }
}
