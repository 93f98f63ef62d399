// Saving a network as JSON, loading it back and evaluating it on a CSV
// matrix.
//
// ```bash
// cargo run --example network_files
// ```

use std::error::Error;

use strassen_mnn::io::{load_matrix, load_network, save_matrix, save_network};
use strassen_mnn::{build_str_square, pack_ab, Matrix, Relu2Product};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("snn-network-files-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let (net_path, input_path) = (dir.join("square2.json"), dir.join("input.csv"));

    let net = build_str_square(2, 1e-3, 1.0, &Relu2Product)?;
    save_network(&net, &net_path)?;
    let input = pack_ab(
        &Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]),
        &Matrix::identity(2),
    )?;
    save_matrix(&input, &input_path)?;

    let loaded = load_network(&net_path)?;
    assert_eq!(loaded, net);
    let out = loaded.realize(&load_matrix(&input_path)?)?;
    println!(
        "{} bytes of JSON, output {out:?}",
        std::fs::metadata(&net_path)?.len()
    );
    assert_eq!(out, net.realize(&input)?);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
