//! Canonical sparse and dense types, Matrix Market I/O, synthetic inputs and
//! the reference SpMM.

mod coo;
mod csr;
mod dense;
pub mod generate;
pub mod mtx;
mod oracle;
mod stats;

use thiserror::Error;

pub use coo::CooMatrix;
pub use csr::{check_permutation, CsrMatrix};
pub use dense::DenseMatrix;
pub use generate::generate_power_law;
pub use mtx::{read_matrix_market, save_matrix_market, write_matrix_market};
pub use oracle::oracle_spmm;
pub use stats::{row_stats, RowStats};

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension overflow: {0}")]
    Overflow(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid matrix: {0}")]
    Invalid(String),
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
