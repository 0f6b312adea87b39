use super::knn::KnnGraph;
use super::permutation::Permutation;

/// Disjoint sets with union by rank and path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Orders rows by a depth-first walk of the graph's minimum spanning forest
/// under edge weight `1 - sim`.
///
/// Kruskal breaks weight ties by (smaller endpoint, larger endpoint). Each
/// tree is walked from its lowest-index vertex, visiting children by
/// descending similarity (ties: lower index); trees follow each other by
/// ascending root and vertices without forest edges come last in index
/// order. The returned objective is measured with the graph's own
/// similarities, so pairs without an edge count as fully dissimilar.
pub fn mst_order(g: &KnnGraph) -> Permutation {
    let n = g.n_rows;
    let mut edges = g.edges();
    edges.sort_by(|x, y| (1.0 - x.2).total_cmp(&(1.0 - y.2)).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));

    let mut uf = UnionFind::new(n);
    let mut tree: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (u, v, s) in edges {
        if uf.union(u, v) {
            tree[u].push((v, s));
            tree[v].push((u, s));
        }
    }
    for list in &mut tree {
        list.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    }

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut stack = Vec::new();
    // ascending scan: the first unvisited vertex of a tree is its lowest index
    for root in 0..n {
        if visited[root] || tree[root].is_empty() {
            continue;
        }
        stack.push(root);
        while let Some(v) = stack.pop() {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            order.push(v);
            for &(u, _) in tree[v].iter().rev() {
                if !visited[u] {
                    stack.push(u);
                }
            }
        }
    }
    order.extend((0..n).filter(|&v| tree[v].is_empty()));
    Permutation::scored(order, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_is_identity() {
        let p = mst_order(&KnnGraph::from_edges(5, &[]));
        assert_eq!(p.order, vec![0, 1, 2, 3, 4]);
        assert_eq!(p.objective, 4.0);
    }

    #[test]
    fn path_graph() {
        let p = mst_order(&KnnGraph::from_edges(3, &[(0, 1, 0.9), (1, 2, 0.8)]));
        assert_eq!(p.order, vec![0, 1, 2]);
        assert!((p.objective - 0.3).abs() < 1e-12);
    }

    #[test]
    fn triangle_drops_weakest_edge() {
        let p = mst_order(&KnnGraph::from_edges(3, &[(0, 1, 0.9), (1, 2, 0.9), (0, 2, 0.1)]));
        assert_eq!(p.order, vec![0, 1, 2]);
    }

    #[test]
    fn children_by_descending_similarity() {
        // star around 0: child 3 is most similar, then 1, then 2
        let p = mst_order(&KnnGraph::from_edges(4, &[(0, 1, 0.5), (0, 2, 0.4), (0, 3, 0.7)]));
        assert_eq!(p.order, vec![0, 3, 1, 2]);
    }

    #[test]
    fn forest_then_isolated() {
        let p = mst_order(&KnnGraph::from_edges(6, &[(4, 5, 0.5), (1, 3, 0.6)]));
        assert_eq!(p.order, vec![1, 3, 4, 5, 0, 2]);
    }

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(4);
        assert!(uf.union(0, 1));
        assert!(uf.union(2, 3));
        assert!(!uf.union(1, 0));
        assert!(uf.union(1, 3));
        assert_eq!(uf.find(0), uf.find(2));
    }
}
