// Zero-padded product networks: a `5 x 6` by `6 x 4` product fed as
// `(A^T | B)`, and a `3 x 3` square product fed as `(A | B)`.
//
// ```bash
// cargo run --example multiply_rect_square
// ```

use std::error::Error;

use strassen_mnn::oracles::{matmul_naive, random_uniform, Seed};
use strassen_mnn::strassen::padded_bound_for;
use strassen_mnn::{
    build_str_rect, build_str_square, pack_ab, pack_atb, Counts, RectShape, ReluProduct,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let eps = 1e-2;
    let mut rng = Seed::default().rng(1);

    let shape = RectShape::new(5, 6, 4)?;
    let net = build_str_rect(shape, eps, 1.0, &ReluProduct)?;
    let a = random_uniform(5, 6, -1.0, 1.0, &mut rng);
    let b = random_uniform(6, 4, -1.0, 1.0, &mut rng);
    let err = net
        .realize(&pack_atb(&a, &b)?)?
        .sub(&matmul_naive(&a, &b)?)
        .max_abs();
    let bound = padded_bound_for(shape.gamma(), eps, 1.0, &ReluProduct)?;
    println!(
        "(5,6,4) padded to side {}: {:?} <= {bound:?}, error {err:.2e}",
        shape.side(),
        Counts::of(&net)
    );
    assert!(err <= eps && bound.admits(Counts::of(&net)));

    let net = build_str_square(3, eps, 1.0, &ReluProduct)?;
    let a = random_uniform(3, 3, -1.0, 1.0, &mut rng);
    let b = random_uniform(3, 3, -1.0, 1.0, &mut rng);
    let err = net
        .realize(&pack_ab(&a, &b)?)?
        .sub(&matmul_naive(&a, &b)?)
        .max_abs();
    println!("3 x 3 square: {:?}, error {err:.2e}", Counts::of(&net));
    assert!(err <= eps);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
