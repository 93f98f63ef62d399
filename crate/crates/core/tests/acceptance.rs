//! Acceptance criteria, one line per criterion. Runs without the test
//! harness so the lines always reach the console.

use std::process::ExitCode;
use std::time::Instant;

use strassen_mnn::oracles::{Seed, DEFAULT_SEED};
use strassen_mnn::verify::acceptance;

fn main() -> ExitCode {
    let seed = std::env::var("SNN_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    let start = Instant::now();
    let checks = match acceptance(Seed(seed)) {
        Ok(checks) => checks,
        Err(e) => {
            println!("acceptance run aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("acceptance criteria (seed {seed}):");
    for check in &checks {
        println!("{check}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} criteria passed in {:.1}s",
        checks.len() - failed,
        checks.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
