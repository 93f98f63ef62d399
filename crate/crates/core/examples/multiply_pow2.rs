// Strassen product network for `4 x 4` operands, checked against the
// naive product for both activations.
//
// ```bash
// cargo run --example multiply_pow2
// ```

use std::error::Error;

use strassen_mnn::oracles::{matmul_naive, random_uniform, Seed};
use strassen_mnn::{build_str_pow2, pack_ab, Counts, Relu2Product, ReluProduct};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = Seed::default().rng(0);
    let a = random_uniform(4, 4, -1.0, 1.0, &mut rng);
    let b = random_uniform(4, 4, -1.0, 1.0, &mut rng);
    let truth = matmul_naive(&a, &b)?;

    let exact = build_str_pow2(2, 1e-3, 1.0, &Relu2Product)?;
    let err = exact.realize(&pack_ab(&a, &b)?)?.sub(&truth).max_abs();
    println!("relu2, k=2: {:?}, max error {err:.2e}", Counts::of(&exact));
    assert!(err < 1e-12);

    let eps = 1e-2;
    let approx = build_str_pow2(2, eps, 1.0, &ReluProduct)?;
    let err = approx.realize(&pack_ab(&a, &b)?)?.sub(&truth).max_abs();
    println!(
        "relu, k=2, eps={eps}: {:?}, max error {err:.2e}",
        Counts::of(&approx)
    );
    assert!(err <= eps);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
