use super::permutation::Permutation;
use super::similarity::RowSimilarity;
use super::ReorderError;

/// Minimum gain for a 2-opt move; keeps float noise from cycling.
const MIN_GAIN: f64 = 1e-10;

/// 2-opt over sliding segments: reverses `order[i..=j]` for `j - i < window`
/// whenever that strictly lowers the objective. Sweeps up to `max_passes`
/// times or until a sweep finds no improving move.
pub fn refine_2opt<S: RowSimilarity + ?Sized>(
    s: &S,
    p: &Permutation,
    window: usize,
    max_passes: usize,
) -> Result<Permutation, ReorderError> {
    if window < 2 {
        return Err(ReorderError::Params(format!("2-opt window must be at least 2, got {window}")));
    }
    if max_passes == 0 {
        return Ok(p.clone());
    }
    let dis = |x: usize, y: usize| 1.0 - s.sim(x, y);
    let mut order = p.order.clone();
    let n = order.len();
    let mut changed = false;
    for _ in 0..max_passes {
        let mut improved = false;
        for i in 0..n {
            for j in i + 1..(i + window).min(n) {
                let mut before = 0.0;
                let mut after = 0.0;
                if i > 0 {
                    before += dis(order[i - 1], order[i]);
                    after += dis(order[i - 1], order[j]);
                }
                if j + 1 < n {
                    before += dis(order[j], order[j + 1]);
                    after += dis(order[i], order[j + 1]);
                }
                if after < before - MIN_GAIN {
                    order[i..=j].reverse();
                    improved = true;
                }
            }
        }
        changed |= improved;
        if !improved {
            break;
        }
    }
    if !changed {
        return Ok(p.clone());
    }
    Ok(Permutation::scored(order, s))
}

/// Moves locally isolated rows next to their best match.
///
/// A row is isolated when its similarity to every permutation neighbour is
/// below `iso_threshold`. Isolated rows leave their slots and are reinserted
/// right after their most similar non-isolated row (ties: lower row index);
/// several rows attached to one anchor keep their previous relative order.
/// Rows with no positive-similarity anchor go to the tail in ascending index
/// order.
pub fn isolation_adjust<S: RowSimilarity + ?Sized>(
    s: &S,
    p: &Permutation,
    iso_threshold: f64,
) -> Result<Permutation, ReorderError> {
    if !(0.0..=1.0).contains(&iso_threshold) {
        return Err(ReorderError::Params(format!("iso_threshold must lie in [0, 1], got {iso_threshold}")));
    }
    let order = &p.order;
    let n = order.len();
    let mut isolated = vec![false; s.n_rows()];
    let mut any = false;
    for i in 0..n {
        let left = (i > 0).then(|| s.sim(order[i], order[i - 1]));
        let right = (i + 1 < n).then(|| s.sim(order[i], order[i + 1]));
        let lonely = match (left, right) {
            (None, None) => false,
            (l, r) => l.is_none_or(|x| x < iso_threshold) && r.is_none_or(|x| x < iso_threshold),
        };
        if lonely {
            isolated[order[i]] = true;
            any = true;
        }
    }
    if !any {
        return Ok(p.clone());
    }

    let mut attached: Vec<Vec<usize>> = vec![Vec::new(); s.n_rows()];
    let mut tail = Vec::new();
    for &r in order.iter().filter(|&&r| isolated[r]) {
        let pool = s.related(r).unwrap_or_else(|| (0..s.n_rows()).collect());
        let mut best: Option<(f64, usize)> = None;
        for u in pool {
            if u == r || isolated[u] {
                continue;
            }
            let v = s.sim(r, u);
            if v > 0.0 && best.is_none_or(|(bv, bu)| v > bv || (v == bv && u < bu)) {
                best = Some((v, u));
            }
        }
        match best {
            Some((_, u)) => attached[u].push(r),
            None => tail.push(r),
        }
    }
    tail.sort_unstable();

    let mut out = Vec::with_capacity(n);
    for &r in order.iter().filter(|&&r| !isolated[r]) {
        out.push(r);
        out.extend_from_slice(&attached[r]);
    }
    out.extend(tail);
    Ok(Permutation::scored(out, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reorder::{objective, SimilarityTable};

    fn table(n: usize, pairs: &[(usize, usize, f64)]) -> SimilarityTable {
        let mut t = SimilarityTable::new(n);
        for &(a, b, s) in pairs {
            t.set(a, b, s);
        }
        t
    }

    #[test]
    fn optimal_order_is_a_fixed_point() {
        let t = table(3, &[(0, 1, 0.9), (1, 2, 0.9)]);
        let p = Permutation::scored(vec![0, 1, 2], &t);
        assert_eq!(refine_2opt(&t, &p, 64, 3).unwrap(), p);
    }

    #[test]
    fn reversal_puts_middle_row_between() {
        let t = table(3, &[(0, 1, 0.9), (1, 2, 0.9), (0, 2, 0.0)]);
        let p = Permutation::scored(vec![0, 2, 1], &t);
        assert!((p.objective - 1.1).abs() < 1e-12);
        let q = refine_2opt(&t, &p, 64, 3).unwrap();
        assert!(q.order == vec![0, 1, 2] || q.order == vec![2, 1, 0]);
        assert!((q.objective - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_passes_is_identity() {
        let t = table(3, &[(0, 1, 0.9), (1, 2, 0.9)]);
        let p = Permutation::scored(vec![0, 2, 1], &t);
        assert_eq!(refine_2opt(&t, &p, 64, 0).unwrap(), p);
        assert!(refine_2opt(&t, &p, 1, 1).is_err());
    }

    #[test]
    fn window_limits_reach() {
        // fixing the order needs a reversal spanning 3 positions
        let t = table(4, &[(0, 1, 1.0), (2, 3, 1.0), (1, 2, 1.0)]);
        let p = Permutation::scored(vec![0, 2, 1, 3], &t);
        let narrow = refine_2opt(&t, &p, 2, 5).unwrap();
        let wide = refine_2opt(&t, &p, 4, 5).unwrap();
        assert!(wide.objective <= narrow.objective);
        assert!((wide.objective - objective(&t, &wide.order)).abs() < 1e-12);
    }

    #[test]
    fn zero_threshold_isolates_nothing() {
        let t = table(3, &[]);
        let p = Permutation::scored(vec![2, 0, 1], &t);
        assert_eq!(isolation_adjust(&t, &p, 0.0).unwrap(), p);
    }

    #[test]
    fn unmatched_row_moves_to_tail() {
        // row 2 stands in for a row with no similarity to anything
        let t = table(3, &[(0, 1, 0.5)]);
        let p = Permutation::scored(vec![0, 2, 1], &t);
        assert_eq!(isolation_adjust(&t, &p, 0.05).unwrap().order, vec![0, 1, 2]);
    }

    #[test]
    fn isolated_row_lands_after_best_match() {
        let t = table(4, &[(0, 1, 0.9), (1, 3, 0.01), (3, 2, 0.02), (3, 0, 0.6), (2, 1, 0.5)]);
        let p = Permutation::scored(vec![0, 1, 3, 2], &t);
        let q = isolation_adjust(&t, &p, 0.05).unwrap();
        assert_eq!(q.order, vec![0, 3, 1, 2]);
        assert!(q.objective < p.objective);
    }

    #[test]
    fn threshold_range_checked() {
        let t = table(2, &[]);
        let p = Permutation::identity(&t);
        assert!(isolation_adjust(&t, &p, 1.5).is_err());
    }
}
