mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use strassen_mnn::oracles::{
    exact_inverse, gen_contraction, matmul_naive, random_gaussian, random_uniform, spectral_norm,
    Seed,
};
use strassen_mnn::Matrix;

fn to_na(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn spectral_norm_matches_svd(n in 1usize..9, seed in any::<u64>()) {
        let a = random_gaussian(n, n, &mut Seed(seed).rng(0));
        let ours = spectral_norm(&a);
        let svd = to_na(&a).singular_values().max();
        prop_assert!(ours.converged);
        prop_assert!((ours.value - svd).abs() <= 1e-8 * svd.max(1.0), "{} vs {}", ours.value, svd);
    }

    #[test]
    fn inverse_matches_nalgebra(n in 1usize..9, alpha in 0.5f64..4.0, seed in any::<u64>()) {
        let c = gen_contraction(n, 0.9, alpha, Seed(seed), 1).unwrap();
        let ours = exact_inverse(&c.a).unwrap();
        let theirs = to_na(&c.a).try_inverse().unwrap();
        let gap = (to_na(&ours) - theirs).amax();
        prop_assert!(gap <= 1e-9, "gap {}", gap);
        prop_assert!(matmul_naive(&c.a, &ours).unwrap().sub(&Matrix::identity(n)).max_abs() <= 1e-10);
    }

    #[test]
    fn contractions_have_the_promised_norm(n in 1usize..9, delta in 0.0f64..0.99, alpha in 0.5f64..4.0, seed in any::<u64>()) {
        let c = gen_contraction(n, delta, alpha, Seed(seed), 2).unwrap();
        let residual = Matrix::identity(n).sub(&c.a.scaled(alpha));
        let norm = to_na(&residual).singular_values().max();
        prop_assert!(norm <= delta + 1e-12);
    }

    #[test]
    fn product_matches_nalgebra(m in 1usize..7, n in 1usize..7, p in 1usize..7, seed in any::<u64>()) {
        let mut rng = Seed(seed).rng(3);
        let a = random_uniform(m, n, -1.0, 1.0, &mut rng);
        let b = random_uniform(n, p, -1.0, 1.0, &mut rng);
        let gap = (to_na(&matmul_naive(&a, &b).unwrap()) - to_na(&a) * to_na(&b)).amax();
        prop_assert!(gap <= 1e-14);
    }
}

#[test]
fn frozen_reference_values() {
    let a = Matrix::from_rows(&[[4.0, 7.0], [2.0, 6.0]]);
    let inv = exact_inverse(&a).unwrap();
    assert!(
        inv.sub(&Matrix::from_rows(&[[0.6, -0.7], [-0.2, 0.4]]))
            .max_abs()
            < 1e-15
    );
    // |[[3, 0], [4, 5]]|_2 = sqrt(45)
    let s = spectral_norm(&Matrix::from_rows(&[[3.0, 0.0], [4.0, 5.0]]));
    assert!((s.value - 45f64.sqrt()).abs() < 1e-12);
    assert!(exact_inverse(&Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]])).is_err());
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let draw = |seed, stream| random_uniform(2, 2, 0.0, 1.0, &mut Seed(seed).rng(stream));
    assert_eq!(draw(42, 0), draw(42, 0));
    assert_ne!(draw(42, 0), draw(42, 1));
    assert_ne!(draw(42, 0), draw(43, 0));
}
