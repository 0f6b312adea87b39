//! Row-structured hybrid SpMM.
//!
//! The pipeline reorders rows for locality ([`reorder`]), splits them into
//! tensor-core row windows and short residual rows ([`partition`]), encodes
//! the result as an RS-Tile matrix ([`rstile`]) and multiplies it against a
//! dense operand with a portable executor ([`exec`]). [`sparse::oracle_spmm`]
//! is the reference every path is checked against, and [`metrics`] reports
//! tile density and storage.

pub mod exec;
pub mod metrics;
pub mod partition;
pub mod reorder;
pub mod rstile;
pub mod sparse;
