//! Locality-aware row reordering.
//!
//! Rows are compared by weighted Jaccard similarity over their column
//! supports, with column `j` weighted `d_j^-alpha` (`d_j` = rows touching
//! `j`). The goal is a row order with small cumulative adjacent
//! dissimilarity `Σ (1 - sim(order[i], order[i+1]))`. Four stages get there:
//! candidate pairs from an inverted column index, a kNN similarity graph, a
//! DFS walk of its minimum spanning forest, then 2-opt refinement inside
//! sliding segments and relocation of isolated rows.

mod candidates;
mod knn;
mod mst;
mod permutation;
mod pipeline;
mod refine;
mod similarity;

use thiserror::Error;

pub use candidates::build_candidates;
pub use knn::{build_knn, KnnGraph};
pub use mst::{mst_order, UnionFind};
pub use permutation::Permutation;
pub use pipeline::{reorder_pipeline, reorder_pipeline_traced, ReorderParams, ReorderTrace};
pub use refine::{isolation_adjust, refine_2opt};
pub use similarity::{
    column_weights, objective, w_jaccard, ColumnWeights, RowSimilarity, SimilarityTable, WeightedJaccard,
};

#[derive(Debug, Error)]
pub enum ReorderError {
    #[error("invalid reordering parameter: {0}")]
    Params(String),
    #[error("malformed permutation file: {0}")]
    Format(String),
    #[error(transparent)]
    Sparse(#[from] crate::sparse::SparseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
