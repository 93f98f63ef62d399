mod common;

use proptest::prelude::*;
use strassen_mnn::oracles::{matmul_naive, random_uniform, strassen_exact, Seed};
use strassen_mnn::strassen::{formula_counts_pow2, padded_bound_for, recursive_counts_pow2};
use strassen_mnn::{
    build_str_pow2, build_str_rect, build_str_square, pack_ab, pack_atb, Counts, GadgetFactory,
    GadgetSpec, RectShape, Relu2Product, ReluProduct,
};

proptest! {
    #![proptest_config(common::config(32))]

    #[test]
    fn relu2_rect_network_is_a_product(m in 1usize..6, n in 1usize..6, p in 1usize..6, seed in any::<u64>()) {
        let shape = RectShape::new(m, n, p).unwrap();
        let net = build_str_rect(shape, 1e-3, 1.0, &Relu2Product).unwrap();
        let mut rng = Seed(seed).rng(0);
        let a = random_uniform(m, n, -1.0, 1.0, &mut rng);
        let b = random_uniform(n, p, -1.0, 1.0, &mut rng);
        let err = net.realize(&pack_atb(&a, &b).unwrap()).unwrap().sub(&matmul_naive(&a, &b).unwrap()).max_abs();
        prop_assert!(err <= 1e-12, "error {}", err);
        let bound = padded_bound_for(shape.gamma(), 1e-3, 1.0, &Relu2Product).unwrap();
        prop_assert!(bound.admits(Counts::of(&net)));
    }

    #[test]
    fn relu_square_network_meets_eps(n in 1usize..6, exp in 1i32..4, range in 0.5f64..2.0, seed in any::<u64>()) {
        let eps = 10f64.powi(-exp);
        let net = build_str_square(n, eps, range, &ReluProduct).unwrap();
        let mut rng = Seed(seed).rng(1);
        let a = random_uniform(n, n, -range, range, &mut rng);
        let b = random_uniform(n, n, -range, range, &mut rng);
        let err = net.realize(&pack_ab(&a, &b).unwrap()).unwrap().sub(&matmul_naive(&a, &b).unwrap()).max_abs();
        prop_assert!(err <= eps, "n={} eps={} error {}", n, eps, err);
    }

    #[test]
    fn closed_form_matches_recursion(k in 0u32..9, mg in 1u64..10_000, lg in 1u64..50) {
        prop_assert_eq!(formula_counts_pow2(k, mg, lg).unwrap(), recursive_counts_pow2(k, mg, lg).unwrap());
    }

    #[test]
    fn oracle_strassen_agrees_with_naive(k in 0u32..5, seed in any::<u64>()) {
        let n = 1 << k;
        let mut rng = Seed(seed).rng(2);
        let a = random_uniform(n, n, -1.0, 1.0, &mut rng);
        let b = random_uniform(n, n, -1.0, 1.0, &mut rng);
        let gap = strassen_exact(&a, &b).unwrap().sub(&matmul_naive(&a, &b).unwrap()).max_abs();
        prop_assert!(gap <= 1e-12);
    }
}

#[test]
fn pow2_sizes_match_closed_form() {
    for k in 0..=3 {
        for (eps, f) in [
            (1.0, &Relu2Product as &dyn GadgetFactory),
            (1e-2, &ReluProduct),
        ] {
            let net = build_str_pow2(k, eps, 1.0, f).unwrap();
            let leaf = f
                .build(strassen_mnn::strassen::leaf_spec(k, eps, 1.0).unwrap())
                .unwrap();
            let leaf = Counts::of(&leaf);
            assert_eq!(
                Counts::of(&net),
                formula_counts_pow2(k, leaf.weights, leaf.layers).unwrap()
            );
        }
    }
    // frozen: 7 * (12 + 12) - 48 = 120 weights, 2 + 2 layers
    assert_eq!(
        Counts::of(&build_str_pow2(1, 1.0, 1.0, &Relu2Product).unwrap()),
        Counts {
            weights: 120,
            layers: 4
        }
    );
}

#[test]
fn invalid_requests_fail() {
    assert!(build_str_pow2(13, 1e-2, 1.0, &Relu2Product).is_err());
    assert!(strassen_exact(
        &strassen_mnn::Matrix::zeros(3, 3),
        &strassen_mnn::Matrix::zeros(3, 3)
    )
    .is_err());
    assert!(RectShape::new(0, 2, 2).is_err());
    assert!(GadgetSpec::new(0.0, 1.0).is_err());
    assert!(build_str_square(2, 1e-2, -1.0, &ReluProduct).is_err());
    let net = build_str_square(2, 1e-2, 1.0, &ReluProduct).unwrap();
    assert!(net.realize(&strassen_mnn::Matrix::zeros(2, 2)).is_err());
}
