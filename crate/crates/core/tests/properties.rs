use proptest::prelude::*;

use rsh_spmm::exec::{decode_tile, hybrid_spmm, ExecConfig, Fragment8x8, Precision};
use rsh_spmm::partition::{partition_rows, split_long_work, PartitionParams, Threshold};
use rsh_spmm::reorder::{
    column_weights, objective, refine_2opt, reorder_pipeline, w_jaccard, Permutation, WeightedJaccard,
};
use rsh_spmm::rstile::{build_rstile, decode_rstile, read_rstile, validate, write_rstile};
use rsh_spmm::sparse::generate::random_permutation;
use rsh_spmm::sparse::mtx::parse_matrix_market;
use rsh_spmm::sparse::{oracle_spmm, write_matrix_market, CooMatrix, CsrMatrix, DenseMatrix};

/// Random matrix with up to `max_dim` rows and columns and small integer
/// values (so sums are exact in f32).
fn matrix(max_dim: usize) -> impl Strategy<Value = CsrMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        prop::collection::vec((0..r, 0..c, -4i8..=4), 0..=(r * c).min(300)).prop_map(move |t| {
            let t: Vec<_> = t.into_iter().filter(|x| x.2 != 0).map(|(i, j, v)| (i, j, v as f32)).collect();
            CsrMatrix::from_triplets(r, c, &t).unwrap()
        })
    })
}

fn params() -> impl Strategy<Value = PartitionParams> {
    (1..=8usize, 0..=8usize, 0..=4usize, prop::option::of(1..=8usize)).prop_map(|(w, tn, ti, mb)| PartitionParams {
        window_size: w,
        tau_nnz: Threshold::Fixed(tn),
        tau_inc: Threshold::Fixed(ti),
        max_blocks_per_item: mb,
        ..PartitionParams::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn coo_csr_round_trip(a in matrix(30)) {
        let back = CooMatrix::from(&a).to_csr().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn matrix_market_round_trip(a in matrix(30)) {
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        prop_assert_eq!(parse_matrix_market(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn w_jaccard_symmetric_and_bounded(a in matrix(20), alpha in 0.05f64..2.0) {
        let w = column_weights(&a, alpha).unwrap();
        for r in 0..a.n_rows() {
            for u in 0..a.n_rows() {
                let s = w_jaccard(&a, &w, r, u);
                prop_assert!((0.0..=1.0).contains(&s));
                prop_assert_eq!(s, w_jaccard(&a, &w, u, r));
            }
            prop_assert_eq!(w_jaccard(&a, &w, r, r), 1.0);
        }
    }

    #[test]
    fn two_opt_never_increases(a in matrix(24), seed in any::<u64>(), window in 2usize..12, passes in 1usize..4) {
        let w = column_weights(&a, 0.5).unwrap();
        let sim = WeightedJaccard::new(&a, &w);
        let start = Permutation::scored(random_permutation(a.n_rows(), seed), &sim);
        let out = refine_2opt(&sim, &start, window, passes).unwrap();
        prop_assert!(out.objective <= start.objective);
        prop_assert!((objective(&sim, &out.order) - out.objective).abs() <= 1e-9);
        prop_assert!(out.check().is_ok());
    }

    #[test]
    fn reordered_rows_follow_permutation(a in matrix(24)) {
        let (p, r) = reorder_pipeline(&a, &Default::default()).unwrap();
        prop_assert!(p.check().is_ok());
        for (i, &src) in p.order.iter().enumerate() {
            prop_assert_eq!(r.row_cols(i), a.row_cols(src));
            prop_assert_eq!(r.row_values(i), a.row_values(src));
        }
    }

    #[test]
    fn plans_are_sound(a in matrix(40), p in params()) {
        let plan = split_long_work(&a, &partition_rows(&a, &p).unwrap(), &p).unwrap();
        prop_assert!(plan.check(&a, p.window_size).is_ok());
        prop_assert_eq!(plan.window_nnz(&a) + plan.residual_nnz(&a), a.nnz());
    }

    #[test]
    fn build_decode_and_file_round_trip(a in matrix(40), p in params()) {
        let plan = split_long_work(&a, &partition_rows(&a, &p).unwrap(), &p).unwrap();
        let m = build_rstile(&a, &plan, p.window_size).unwrap();
        prop_assert!(validate(&m).is_empty());
        prop_assert_eq!(&decode_rstile(&m).unwrap(), &a);
        let mut bytes = Vec::new();
        write_rstile(&m, &mut bytes).unwrap();
        prop_assert_eq!(read_rstile(bytes.as_slice()).unwrap(), m);
    }

    #[test]
    fn hybrid_matches_oracle_and_ignores_splitting(a in matrix(40), p in params(), d in 1usize..20, seed in any::<u64>()) {
        let b = DenseMatrix::random_uniform(a.n_cols(), d, seed);
        let reference = oracle_spmm(&a, &b).unwrap();
        let plan = partition_rows(&a, &p).unwrap();
        let unsplit = PartitionParams { max_blocks_per_item: None, ..p.clone() };
        let m_split = build_rstile(&a, &split_long_work(&a, &plan, &p).unwrap(), p.window_size).unwrap();
        let m_whole = build_rstile(&a, &split_long_work(&a, &plan, &unsplit).unwrap(), p.window_size).unwrap();
        let cfg = ExecConfig { num_workers: 3, ..ExecConfig::default() };
        let c1 = hybrid_spmm(&m_split, &b, &cfg).unwrap();
        let c2 = hybrid_spmm(&m_whole, &b, &ExecConfig::default()).unwrap();
        prop_assert!(c1.max_relative_error(&reference).unwrap() <= 1e-5);
        prop_assert_eq!(c1.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>(), c2.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        let f32_cfg = ExecConfig { accumulate_precision: Precision::F32, ..ExecConfig::default() };
        prop_assert!(hybrid_spmm(&m_whole, &b, &f32_cfg).unwrap().max_relative_error(&reference).unwrap() <= 1e-5);
    }

    #[test]
    fn oracle_is_linear_in_b(a in matrix(20), d in 1usize..8, s1 in any::<u64>(), s2 in any::<u64>()) {
        let b1 = DenseMatrix::random_uniform(a.n_cols(), d, s1);
        let b2 = DenseMatrix::random_uniform(a.n_cols(), d, s2);
        let lhs = oracle_spmm(&a, &b1.add(&b2).unwrap()).unwrap();
        let rhs = oracle_spmm(&a, &b1).unwrap().add(&oracle_spmm(&a, &b2).unwrap()).unwrap();
        prop_assert!(lhs.max_relative_error(&rhs).unwrap() <= 1e-5);
    }

    #[test]
    fn tile_decode_reencodes(bitmap in any::<u64>(), seed in any::<u64>()) {
        let n = bitmap.count_ones() as usize;
        let values: Vec<f32> = DenseMatrix::random_uniform(1, n.max(1), seed).data()[..n].iter().map(|v| v + 2.0).collect();
        let tile: Fragment8x8 = decode_tile(bitmap, &values).unwrap();
        prop_assert_eq!(tile.encode(), (bitmap, values));
    }
}
