use rayon::prelude::*;

use super::similarity::{w_jaccard, ColumnWeights, RowSimilarity};
use crate::sparse::CsrMatrix;

/// Undirected k-nearest-neighbour similarity graph.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnGraph {
    pub n_rows: usize,
    pub k: usize,
    /// Each row's own top-k `(row, sim)` picks, best first.
    pub neighbors: Vec<Vec<(usize, f64)>>,
    /// Symmetrized adjacency (an edge kept if either side picked it),
    /// sorted by row index.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl KnnGraph {
    /// Builds the graph from per-row neighbour picks.
    pub fn from_neighbors(n_rows: usize, k: usize, neighbors: Vec<Vec<(usize, f64)>>) -> Self {
        let mut adjacency = vec![Vec::new(); n_rows];
        for (r, list) in neighbors.iter().enumerate() {
            for &(u, s) in list {
                adjacency[r].push((u, s));
                adjacency[u].push((r, s));
            }
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(u, _)| u);
            list.dedup_by_key(|&mut (u, _)| u);
        }
        Self { n_rows, k, neighbors, adjacency }
    }

    /// Graph with exactly the given undirected edges.
    pub fn from_edges(n_rows: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut neighbors = vec![Vec::new(); n_rows];
        for &(u, v, s) in edges {
            neighbors[u.min(v)].push((u.max(v), s));
        }
        let k = neighbors.iter().map(Vec::len).max().unwrap_or(0);
        Self::from_neighbors(n_rows, k, neighbors)
    }

    pub fn adjacency(&self, r: usize) -> &[(usize, f64)] {
        &self.adjacency[r]
    }

    /// Undirected edges `(u, v, sim)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&(v, _)| v > u).map(move |&(v, s)| (u, v, s)))
            .collect()
    }
}

/// Similarity along graph edges; pairs without an edge count as 0.
impl RowSimilarity for KnnGraph {
    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn sim(&self, r: usize, u: usize) -> f64 {
        if r == u {
            return 1.0;
        }
        let list = &self.adjacency[r];
        match list.binary_search_by_key(&u, |&(v, _)| v) {
            Ok(i) => list[i].1,
            Err(_) => 0.0,
        }
    }

    fn related(&self, r: usize) -> Option<Vec<usize>> {
        Some(self.adjacency[r].iter().map(|&(u, _)| u).collect())
    }
}

/// Scores each row against its candidates and keeps the `k` most similar
/// (ties: lower row index). Zero-similarity pairs are dropped.
pub fn build_knn(a: &CsrMatrix, w: &ColumnWeights, candidates: &[Vec<usize>], k: usize) -> KnnGraph {
    let neighbors = candidates
        .par_iter()
        .enumerate()
        .map(|(r, cands)| {
            let mut scored: Vec<(usize, f64)> = cands
                .iter()
                .filter(|&&u| u != r)
                .map(|&u| (u, w_jaccard(a, w, r, u)))
                .filter(|&(_, s)| s > 0.0)
                .collect();
            scored.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            scored.dedup_by_key(|p| p.0);
            scored.truncate(k);
            scored
        })
        .collect();
    KnnGraph::from_neighbors(a.n_rows(), k, neighbors)
}
