// Measured network sizes next to their closed forms and bounds.
//
// ```bash
// cargo run --example count_formulas
// ```

use std::error::Error;

use strassen_mnn::report::{inverse_report, pow2_report, strassen_growth};
use strassen_mnn::{build_inv, build_str_pow2, InversionSpec, Relu2Product, ReluProduct};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for row in strassen_growth(3, 1.0, 1.0, &Relu2Product)? {
        println!(
            "k={} M={} L={} M+12*4^k={}",
            row.k, row.measured_m, row.measured_l, row.shifted_m
        );
    }

    let net = build_str_pow2(2, 1e-2, 1.0, &ReluProduct)?;
    let report = pow2_report(&net, 2, 1e-2, 1.0, &ReluProduct)?;
    println!("{}", serde_json::to_string(&report)?);
    assert!(report.satisfied);

    let spec = InversionSpec::new(2, 1.0, 0.1, 0.5)?;
    let report = inverse_report(&build_inv(spec, &ReluProduct)?, spec, &ReluProduct)?;
    println!("{}", serde_json::to_string(&report)?);
    assert!(report.satisfied);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
