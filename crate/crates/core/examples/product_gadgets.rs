// Scalar product gadgets: the exact ReLU^2 network and the ReLU
// approximation, with their sizes and measured grid error.
//
// ```bash
// cargo run --example product_gadgets
// ```

use std::error::Error;

use strassen_mnn::gadgets::{eval_product, verify_gadget};
use strassen_mnn::{Activation, Counts, GadgetFactory, GadgetSpec, Relu2Product, ReluProduct};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let exact = Relu2Product.build(GadgetSpec::new(1e-3, 2.0)?)?;
    println!(
        "relu2 gadget {:?}, 1.5 * -0.75 = {}",
        Counts::of(&exact),
        eval_product(&exact, 1.5, -0.75)?
    );
    assert_eq!(eval_product(&exact, 1.5, -0.75)?, -1.125);

    for eps in [1e-1, 1e-3, 1e-6] {
        let spec = GadgetSpec::new(eps, 1.0)?;
        let net = ReluProduct.build(spec)?;
        let err = verify_gadget(&net, |t| Activation::Relu.apply(t), spec, 0.01)?;
        println!(
            "relu gadget eps={eps:e}: {:?}, grid error {err:.3e}",
            Counts::of(&net)
        );
        assert!(err <= eps);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
