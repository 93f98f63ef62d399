mod common;

use common::{random_matrix, random_net};
use proptest::prelude::*;
use strassen_mnn::combinators::pad_depth;
use strassen_mnn::{
    chain, concat, parallelize, Activation, Counts, Matrix, MatrixShape, ParallelBlock,
};

fn activation() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::Relu), Just(Activation::Relu2)]
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn stacking_composes_realizations(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4, act in activation()) {
        let shape = MatrixShape::new(2, 2).unwrap();
        let first = random_net(seed, shape, d1, act);
        let second = random_net(seed ^ 1, first.out_shape(), d2, act);
        let whole = concat(&second, &first).unwrap();
        let x = random_matrix(seed, shape);
        prop_assert_eq!(whole.realize(&x).unwrap(), second.realize(&first.realize(&x).unwrap()).unwrap());
        let c = Counts::of(&whole);
        prop_assert_eq!(c.weights, (first.num_weights() + second.num_weights()) as u64);
        prop_assert_eq!(c.layers, (d1 + d2) as u64);
        // chain lists the outermost network first
        prop_assert_eq!(chain(&[&second, &first]).unwrap(), whole.clone());
    }

    #[test]
    fn parallel_blocks_are_bit_exact(seed in any::<u64>(), depth in 1usize..4, count in 1usize..4, act in activation()) {
        let input = MatrixShape::new(1, 2).unwrap();
        let nets: Vec<_> = (0..count as u64)
            .map(|i| {
                let mut net = random_net(seed.wrapping_add(i), input, depth, act);
                // equalize output columns by retrying with new seeds
                let mut s = seed.wrapping_add(100 * (i + 1));
                while net.out_shape().cols() != 2 {
                    net = random_net(s, input, depth, act);
                    s += 1;
                }
                net
            })
            .collect();
        let merged = parallelize(&ParallelBlock::new(nets.clone()).unwrap());
        let xs: Vec<Matrix> = (0..count as u64).map(|i| random_matrix(seed ^ i, input)).collect();
        let mut stacked = xs[0].clone();
        for x in &xs[1..] {
            stacked = stacked.vcat(x).unwrap();
        }
        let out = merged.realize(&stacked).unwrap();
        let mut row = 0;
        for (net, x) in nets.iter().zip(&xs) {
            let part = net.realize(x).unwrap();
            prop_assert_eq!(out.block(row, 0, part.rows(), part.cols()), part.clone());
            row += part.rows();
        }
        prop_assert_eq!(merged.num_weights(), nets.iter().map(|n| n.num_weights()).sum::<usize>());
        prop_assert_eq!(merged.num_layers(), depth);
    }

    #[test]
    fn padding_depth_keeps_values(seed in any::<u64>(), extra in 0usize..3) {
        let shape = MatrixShape::new(2, 1).unwrap();
        let net = random_net(seed, shape, 2, Activation::Relu);
        let padded = pad_depth(&net, 2 + extra).unwrap();
        let x = random_matrix(seed, shape);
        prop_assert_eq!(padded.num_layers(), 2 + extra);
        prop_assert_eq!(padded.realize(&x).unwrap(), net.realize(&x).unwrap());
    }
}

#[test]
fn mismatched_shapes_are_rejected() {
    let a = random_net(1, MatrixShape::new(2, 2).unwrap(), 1, Activation::Relu);
    let b = random_net(2, MatrixShape::new(3, 3).unwrap(), 1, Activation::Relu);
    if b.out_shape() != a.in_shape() {
        assert!(concat(&a, &b).is_err());
    }
    let deep = random_net(3, MatrixShape::new(2, 2).unwrap(), 2, Activation::Relu);
    assert!(ParallelBlock::new(vec![a, deep]).is_err());
}
