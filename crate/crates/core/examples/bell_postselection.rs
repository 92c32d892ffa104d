//! Bell measurement on C, C′ by CNOT + H + Z readout, then tomography of AB
//! within each post-selected group.
//!
//! cargo run --example bell_postselection -- 0.25

use eswap::cli::figures::prepare_pair;
use eswap::cli::Preparation;
use eswap::measures::concurrence_mixed;
use eswap::qstate::tensor;
use eswap::shots::{bell_measure_and_postselect, pauli_settings, tomography_2q, PauliData, ReadoutNoise};
use eswap::swap::BellOutcome;

fn main() -> eswap::Result<()> {
    let q: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.25);
    let xi = prepare_pair(Preparation::Hadamard, 1.0 - q)?;
    let eta = prepare_pair(Preparation::Hadamard, q)?;
    let sampler = bell_measure_and_postselect(&tensor(&xi, &eta), 8192, &ReadoutNoise::noiseless(4), 1)?;
    println!("q = {q}: shots per outcome in the ZZ run {:?}", sampler.allocation());

    let groups = pauli_settings(2).iter().map(|s| sampler.conditional_counts(s)).collect::<eswap::Result<Vec<_>>>()?;
    for o in BellOutcome::ALL {
        let tables: Vec<_> = groups.iter().map(|g| g[o.index()].clone()).collect();
        let rho = tomography_2q(&PauliData::from_counts(&tables)?)?;
        println!("  {:<3} E(AB) = {:.4}", o.to_string(), concurrence_mixed(&rho)?);
    }
    Ok(())
}
