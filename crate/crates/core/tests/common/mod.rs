#![allow(dead_code)]

use rand::Rng;
use strassen_mnn::mnn::{ActivationMask, Layer, MapBuilder, UnitKind};
use strassen_mnn::oracles::Seed;
use strassen_mnn::{Activation, Matrix, MatrixShape, Mnn};

/// A dense random network on `input` with `depth` layers, each with a
/// random output shape up to 3x3, random biases and random rho units.
pub fn random_net(seed: u64, input: MatrixShape, depth: usize, activation: Activation) -> Mnn {
    let mut rng = Seed(seed).rng(99);
    let mut layers = Vec::new();
    let mut in_shape = input;
    for idx in 0..depth {
        let last = idx + 1 == depth;
        let out = MatrixShape::new(rng.random_range(1..=3), rng.random_range(1..=3)).unwrap();
        let mut map = MapBuilder::new(out, in_shape);
        for i in 0..out.rows() {
            for j in 0..out.cols() {
                for k in 0..in_shape.rows() {
                    for l in 0..in_shape.cols() {
                        if rng.random_bool(0.7) {
                            map.push((i, j), (k, l), rng.random_range(-1.0..1.0));
                        }
                    }
                }
            }
        }
        let bias = Matrix::from_fn(out.rows(), out.cols(), |_, _| {
            if rng.random_bool(0.5) {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let mut mask = ActivationMask::identity(out);
        if !last {
            for i in 0..out.rows() {
                for j in 0..out.cols() {
                    if rng.random_bool(0.6) {
                        mask.set(i, j, UnitKind::Rho);
                    }
                }
            }
        }
        layers.push(Layer::new(map.build().unwrap(), bias, mask).unwrap());
        in_shape = out;
    }
    Mnn::new(layers, Some(activation)).unwrap()
}

pub fn random_matrix(seed: u64, shape: MatrixShape) -> Matrix {
    let mut rng = Seed(seed).rng(7);
    Matrix::from_fn(shape.rows(), shape.cols(), |_, _| {
        rng.random_range(-2.0..2.0)
    })
}

/// Proptest settings without failure files (integration tests have no lib.rs
/// next to them to anchor the persistence directory).
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}
