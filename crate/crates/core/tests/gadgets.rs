mod common;

use proptest::prelude::*;
use strassen_mnn::gadgets::{eval_product, grid_points};
use strassen_mnn::{GadgetFactory, GadgetSpec, Relu2Product, ReluProduct};

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn products_are_symmetric(exp in 1i32..12, range in 0.25f64..4.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let spec = GadgetSpec::new(2f64.powi(-exp), range).unwrap();
        let (x, y) = (x * range, y * range);
        for net in [ReluProduct.build(spec).unwrap(), Relu2Product.build(spec).unwrap()] {
            prop_assert_eq!(eval_product(&net, x, y).unwrap(), eval_product(&net, y, x).unwrap());
        }
    }

    #[test]
    fn relu_product_error_within_eps(exp in 1i32..30, range in 0.25f64..4.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let spec = GadgetSpec::new(2f64.powi(-exp), range).unwrap();
        let net = ReluProduct.build(spec).unwrap();
        let (x, y) = (x * range, y * range);
        prop_assert!((eval_product(&net, x, y).unwrap() - x * y).abs() <= spec.epsilon());
    }
}

#[test]
fn sign_flip_stays_within_twice_eps() {
    for eps in [0.3, 1e-2, 1e-5] {
        let spec = GadgetSpec::new(eps, 1.0).unwrap();
        let net = ReluProduct.build(spec).unwrap();
        let points = grid_points(1.0, 0.02);
        for &x in &points {
            for &y in &points {
                let odd = eval_product(&net, -x, y).unwrap() + eval_product(&net, x, y).unwrap();
                assert!(odd.abs() <= 2.0 * eps, "eps={eps} x={x} y={y}: {odd}");
            }
        }
    }
}

#[test]
fn middle_branch_is_the_twelve_weight_network() {
    // eps in [K^2/2, K^2): no sawtooth step, 12 weights and 2 layers
    for (eps, range) in [(0.5, 1.0), (0.9, 1.0), (2.0, 2.0)] {
        let net = ReluProduct
            .build(GadgetSpec::new(eps, range).unwrap())
            .unwrap();
        assert_eq!(
            (net.num_weights(), net.num_layers()),
            (12, 2),
            "eps={eps} K={range}"
        );
    }
}
