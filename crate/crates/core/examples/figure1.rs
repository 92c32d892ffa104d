//! `fig1` data: C_C, P_C and E_AC across the q sweep in theory and in
//! noisy emulation with mitigation, printed as CSV.
//!
//! cargo run --release --example figure1

use eswap::cli::emit::{render, Format};
use eswap::cli::{run_fig1, Mode, SweepConfig};

fn main() -> eswap::Result<()> {
    let cfg = SweepConfig { modes: vec![Mode::Theory, Mode::NoisySim], ..SweepConfig::default() };
    print!("{}", render(&run_fig1(&cfg)?, Format::Csv)?);
    Ok(())
}
