//! Runs every verification suite with a small trial count.
//!
//! cargo run --release --example verify_suites

use eswap::cli::verify::{run_verify, Suite};

fn main() -> eswap::Result<()> {
    for suite in Suite::ALL {
        let trials = suite.default_trials() / 10;
        println!("{}\n", run_verify(suite, trials, 1)?);
    }
    Ok(())
}
