// Inverting a random `4 x 4` matrix with `|I - alpha A|_2 <= 1/2`.
//
// ```bash
// cargo run --example invert_matrix
// ```

use std::error::Error;

use strassen_mnn::oracles::{exact_inverse, gen_contraction, spectral_norm_value, Seed};
use strassen_mnn::{build_inv, Counts, InversionSpec, ReluProduct};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let spec = InversionSpec::new(4, 2.0, 0.01, 0.5)?;
    let net = build_inv(spec, &ReluProduct)?;
    println!("{} stages, {:?}", spec.stages(), Counts::of(&net));

    for stream in 0..3 {
        let c = gen_contraction(4, 0.5, 2.0, Seed::default(), stream)?;
        let err = spectral_norm_value(&net.realize(&c.a)?.sub(&exact_inverse(&c.a)?));
        println!("sample {stream}: |A^-1 - R(A)|_2 = {err:.3e}");
        assert!(err <= spec.epsilon());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
