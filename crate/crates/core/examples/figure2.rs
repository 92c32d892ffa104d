//! `fig2` data: post-selected branch concurrences and the probability
//! identity, theory against ideal emulation.
//!
//! cargo run --release --example figure2

use eswap::cli::figures::PROB_IDENTITY;
use eswap::cli::{run_fig2, Mode, SweepConfig};

fn main() -> eswap::Result<()> {
    let cfg = SweepConfig { modes: vec![Mode::Theory, Mode::IdealSim], ..SweepConfig::default() };
    let table = run_fig2(&cfg)?;
    println!("{:>5} {:>12} {:>10} {:>10} {:>8}", "q", "quantity", "theory", "ideal_sim", "stderr");
    for row in table.select("E_phi_minus", Mode::IdealSim).chain(table.select(PROB_IDENTITY, Mode::IdealSim)) {
        let theory = table.get(row.q, &row.quantity, Mode::Theory).map_or(f64::NAN, |r| r.value);
        println!(
            "{:>5.2} {:>12} {:>10.4} {:>10.4} {:>8.4}",
            row.q,
            row.quantity,
            theory,
            row.value,
            row.stderr.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
