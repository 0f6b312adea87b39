use serde::{Deserialize, Serialize};

use super::{
    build_candidates, build_knn, column_weights, isolation_adjust, mst_order, refine_2opt, Permutation, ReorderError,
    WeightedJaccard,
};
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReorderParams {
    /// Column weight exponent, `w_j = d_j^-alpha`.
    pub alpha: f64,
    /// Neighbours kept per row in the kNN graph.
    pub k: usize,
    pub max_candidates: usize,
    /// 2-opt segment length.
    pub window: usize,
    pub max_passes: usize,
    pub iso_threshold: f64,
}

impl Default for ReorderParams {
    fn default() -> Self {
        Self { alpha: 0.5, k: 8, max_candidates: 256, window: 64, max_passes: 3, iso_threshold: 0.05 }
    }
}

impl ReorderParams {
    pub fn validate(&self) -> Result<(), ReorderError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ReorderError::Params(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.k == 0 {
            return Err(ReorderError::Params("k must be at least 1".into()));
        }
        if self.window < 2 {
            return Err(ReorderError::Params(format!("window must be at least 2, got {}", self.window)));
        }
        if !(0.0..=1.0).contains(&self.iso_threshold) {
            return Err(ReorderError::Params(format!("iso_threshold must lie in [0, 1], got {}", self.iso_threshold)));
        }
        Ok(())
    }
}

/// Objective after each stage, all measured with w-Jaccard on the matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReorderTrace {
    pub identity: f64,
    pub mst: f64,
    pub refined: f64,
    /// Isolation candidate; the pipeline keeps it only if it is no worse than `refined`.
    pub adjusted: f64,
}

/// Runs all four stages and returns the final order with `A[order, :]`.
pub fn reorder_pipeline(a: &CsrMatrix, params: &ReorderParams) -> Result<(Permutation, CsrMatrix), ReorderError> {
    reorder_pipeline_traced(a, params).map(|(p, m, _)| (p, m))
}

pub fn reorder_pipeline_traced(
    a: &CsrMatrix,
    params: &ReorderParams,
) -> Result<(Permutation, CsrMatrix, ReorderTrace), ReorderError> {
    params.validate()?;
    let w = column_weights(a, params.alpha)?;
    let sim = WeightedJaccard::new(a, &w);

    let candidates = build_candidates(a, params.max_candidates);
    let graph = build_knn(a, &w, &candidates, params.k);
    let walk = Permutation::scored(mst_order(&graph).order, &sim);
    let refined = refine_2opt(&sim, &walk, params.window, params.max_passes)?;
    let adjusted = isolation_adjust(&sim, &refined, params.iso_threshold)?;

    let trace = ReorderTrace {
        identity: Permutation::identity(&sim).objective,
        mst: walk.objective,
        refined: refined.objective,
        adjusted: adjusted.objective,
    };
    // relocation only stands when it does not lengthen the path
    let chosen = if adjusted.objective <= refined.objective { adjusted } else { refined };
    chosen.check()?;
    let reordered = a.permute_rows(&chosen.order)?;
    Ok((chosen, reordered, trace))
}
