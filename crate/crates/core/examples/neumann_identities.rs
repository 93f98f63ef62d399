// The truncated Neumann series as a product of `A^(2^k) + I` factors,
// and the squaring network that computes `A^(2^N)`.
//
// ```bash
// cargo run --example neumann_identities
// ```

use std::error::Error;

use strassen_mnn::oracles::{
    gen_bounded_norm, matrix_power, neumann_partial, neumann_product, spectral_norm_value, Seed,
};
use strassen_mnn::{build_sqr, ReluProduct};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let a = gen_bounded_norm(3, 0.5, Seed::default(), 7);
    for depth in 1..=3 {
        let gap = neumann_product(&a, depth)
            .sub(&neumann_partial(&a, 1 << (depth + 1))?)
            .max_abs();
        println!(
            "depth {depth}: product vs sum of {} powers differs by {gap:.1e}",
            1 << (depth + 1)
        );
        assert!(gap < 1e-12);
    }

    let eps = 0.05;
    let sqr = build_sqr(2, 3, eps, &ReluProduct)?;
    let err = spectral_norm_value(&sqr.realize(&a)?.sub(&matrix_power(&a, 4)));
    println!("squaring network, A^4 error {err:.3e}");
    assert!(err <= eps);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
