// Building networks by stacking layers and running networks side by side.
//
// ```bash
// cargo run --example compose_networks
// ```

use std::error::Error;

use strassen_mnn::gadgets::build_product_relu2;
use strassen_mnn::mnn::identity_mnn;
use strassen_mnn::{chain, parallelize, Counts, Matrix, MatrixShape, ParallelBlock};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let gadget = build_product_relu2();

    // Two gadgets side by side read rows (x1, y1) and (x2, y2).
    let pair = parallelize(&ParallelBlock::new(vec![gadget.clone(), gadget.clone()])?);
    let out = pair.realize(&Matrix::from_rows(&[[2.0, 3.0], [-1.0, 4.0]]))?;
    println!("parallel: {:?} -> {out:?}", Counts::of(&pair));
    assert_eq!(out, Matrix::from_rows(&[[6.0], [-4.0]]));

    // Identity layers before the gadget add depth but change nothing.
    let deeper = chain(&[&gadget, &identity_mnn(MatrixShape::new(1, 2)?, 2)?])?;
    println!("chained: {:?}", Counts::of(&deeper));
    assert_eq!(
        deeper.realize(&Matrix::from_rows(&[[2.0, 3.0]]))?[(0, 0)],
        6.0
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
