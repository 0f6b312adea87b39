//! Seeded synthetic matrices.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CsrMatrix, SparseError};

/// Fraction of a row's columns drawn near its diagonal position; the rest are uniform.
const LOCAL_FRACTION: f64 = 0.7;

/// Random matrix with a heavy-tailed row-length distribution.
///
/// Row lengths follow a Pareto law with tail exponent `skew` (smaller means
/// heavier tail), scaled to hit `target_nnz` exactly and clipped to `n_cols`.
/// Each row samples its columns without replacement; most are drawn from a
/// neighbourhood of the row's diagonal position so that nearby rows share
/// columns the way mesh and graph matrices do, the rest uniformly.
pub fn generate_power_law(
    n_rows: usize,
    n_cols: usize,
    target_nnz: usize,
    skew: f64,
    seed: u64,
) -> Result<CsrMatrix, SparseError> {
    if !(skew > 0.0 && skew.is_finite()) {
        return Err(SparseError::Invalid(format!("skew must be positive, got {skew}")));
    }
    let capacity = n_rows.checked_mul(n_cols).ok_or_else(|| SparseError::Overflow("n_rows * n_cols".into()))?;
    if target_nnz > capacity {
        return Err(SparseError::Infeasible(format!("{target_nnz} nonzeros do not fit in {n_rows}x{n_cols}")));
    }
    if target_nnz == 0 {
        return Ok(CsrMatrix::zeros(n_rows, n_cols));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..n_rows)
        .map(|_| {
            let u: f64 = rng.gen();
            (1.0 - u).powf(-1.0 / skew)
        })
        .collect();
    let lengths = allocate_lengths(&draws, n_cols, target_nnz);

    let mut row_ptr = Vec::with_capacity(n_rows + 1);
    let mut col_idx = Vec::with_capacity(target_nnz);
    row_ptr.push(0);
    let mut picked = HashSet::new();
    for (r, &k) in lengths.iter().enumerate() {
        let mut cols = sample_row_columns(&mut rng, r, n_rows, n_cols, k, &mut picked);
        cols.sort_unstable();
        col_idx.extend_from_slice(&cols);
        row_ptr.push(col_idx.len());
    }
    let values = (0..col_idx.len()).map(|_| rng.gen_range(-1.0f32..=1.0)).collect();
    CsrMatrix::new(n_rows, n_cols, row_ptr, col_idx, values)
}

/// Scales `draws` into integer lengths in `[0, cap]` summing to `target`
/// (requires `target <= draws.len() * cap`).
fn allocate_lengths(draws: &[f64], cap: usize, target: usize) -> Vec<usize> {
    let n = draws.len();
    let mut saturated = vec![false; n];
    let mut share = vec![0f64; n];
    loop {
        let free_target = target as f64 - (saturated.iter().filter(|&&s| s).count() * cap) as f64;
        let free_mass: f64 = (0..n).filter(|&i| !saturated[i]).map(|i| draws[i]).sum();
        let mut changed = false;
        for i in 0..n {
            if saturated[i] {
                share[i] = cap as f64;
            } else {
                share[i] = if free_mass > 0.0 { draws[i] * free_target / free_mass } else { 0.0 };
                if share[i] >= cap as f64 {
                    saturated[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut lengths: Vec<usize> = share.iter().map(|&s| (s.floor() as usize).min(cap)).collect();
    let mut assigned: usize = lengths.iter().sum();
    let mut by_remainder: Vec<usize> = (0..n).collect();
    by_remainder.sort_by(|&a, &b| {
        let fa = share[a] - share[a].floor();
        let fb = share[b] - share[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    // largest remainders first; loop again in case clipping left slack
    while assigned < target {
        let before = assigned;
        for &i in &by_remainder {
            if assigned == target {
                break;
            }
            if lengths[i] < cap {
                lengths[i] += 1;
                assigned += 1;
            }
        }
        if assigned == before {
            break;
        }
    }
    lengths
}

fn sample_row_columns(
    rng: &mut ChaCha8Rng,
    row: usize,
    n_rows: usize,
    n_cols: usize,
    k: usize,
    picked: &mut HashSet<usize>,
) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    if 2 * k >= n_cols {
        return rand::seq::index::sample(rng, n_cols, k).into_vec();
    }
    picked.clear();
    let center = ((row as f64 + 0.5) * n_cols as f64 / n_rows as f64) as i64;
    // neighbourhood wide enough to hold the row plus some slack
    let spread = (k as f64 * 2.0).max(8.0);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let c = if rng.gen_bool(LOCAL_FRACTION) {
            let u: f64 = rng.gen::<f64>() - 0.5;
            let offset = -spread * u.signum() * (1.0 - 2.0 * u.abs()).max(1e-12).ln() / 2.0;
            (center + offset.round() as i64).rem_euclid(n_cols as i64) as usize
        } else {
            rng.gen_range(0..n_cols)
        };
        if picked.insert(c) {
            out.push(c);
        }
    }
    out
}

/// Block-diagonal matrix of `n_blocks` dense-ish blocks, each
/// `rows_per_block × cols_per_block`, with every in-block entry present with
/// probability `density` (each row keeps at least one entry).
pub fn planted_blocks(
    n_blocks: usize,
    rows_per_block: usize,
    cols_per_block: usize,
    density: f64,
    seed: u64,
) -> Result<CsrMatrix, SparseError> {
    if !(0.0..=1.0).contains(&density) || cols_per_block == 0 {
        return Err(SparseError::Invalid("density must lie in [0, 1] and blocks be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for b in 0..n_blocks {
        for lr in 0..rows_per_block {
            let r = b * rows_per_block + lr;
            let before = triplets.len();
            for lc in 0..cols_per_block {
                if rng.gen_bool(density) {
                    triplets.push((r, b * cols_per_block + lc, rng.gen_range(-1.0f32..=1.0)));
                }
            }
            if triplets.len() == before {
                let lc = rng.gen_range(0..cols_per_block);
                triplets.push((r, b * cols_per_block + lc, rng.gen_range(-1.0f32..=1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n_blocks * rows_per_block, n_blocks * cols_per_block, &triplets)
}

/// Uniformly random permutation of `[0, n)`.
pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Fixed, seeded mix of matrices used across the test suites: power-law
/// matrices over several shapes, skews and densities, planted blocks, and a
/// handful of edge shapes (empty rows, single row, dense, identity).
pub fn test_corpus(seed: u64) -> Vec<(String, CsrMatrix)> {
    let mut out = Vec::new();
    let shapes = [(64, 64), (200, 150), (257, 300), (512, 512), (1000, 1000), (1500, 700)];
    let densities = [0.002, 0.01, 0.05];
    let skews = [1.2, 1.5, 2.0];
    let mut k = 0u64;
    for &(r, c) in &shapes {
        for &d in &densities {
            let skew = skews[k as usize % skews.len()];
            let nnz = ((r * c) as f64 * d).round().max(1.0) as usize;
            let a = generate_power_law(r, c, nnz, skew, seed.wrapping_add(k)).expect("corpus parameters are feasible");
            out.push((format!("powerlaw_{r}x{c}_d{d}_s{skew}"), a));
            k += 1;
        }
    }
    out.push(("planted_16x8".into(), planted_blocks(16, 8, 8, 0.6, seed).expect("valid")));
    out.push(("planted_10x5_wide".into(), planted_blocks(10, 5, 40, 0.3, seed + 1).expect("valid")));
    out.push(("identity_100".into(), CsrMatrix::identity(100)));
    out.push(("zeros_9x4".into(), CsrMatrix::zeros(9, 4)));
    let dense: Vec<_> = (0..13).flat_map(|r| (0..11).map(move |c| (r, c, (r * 11 + c) as f32 * 0.25 - 7.0))).collect();
    out.push(("dense_13x11".into(), CsrMatrix::from_triplets(13, 11, &dense).expect("valid")));
    let single: Vec<_> = (0..300).step_by(3).map(|c| (0, c, 1.0 + c as f32)).collect();
    out.push(("single_row_1x300".into(), CsrMatrix::from_triplets(1, 300, &single).expect("valid")));
    // every third row empty, one long row
    let mut gappy = Vec::new();
    for r in 0..90 {
        if r % 3 == 1 {
            continue;
        }
        let len = if r == 41 { 500 } else { 1 + r % 5 };
        for j in 0..len {
            gappy.push((r, (r * 7 + j * 13) % 600, 0.5 - (j % 3) as f32));
        }
    }
    out.push(("gappy_90x600".into(), CsrMatrix::from_triplets(90, 600, &gappy).expect("valid")));
    out
}
