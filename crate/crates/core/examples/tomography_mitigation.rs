//! Finite-shot Pauli tomography of a pair, with readout noise and
//! calibration-matrix mitigation.
//!
//! cargo run --example tomography_mitigation

use eswap::measures::concurrence_mixed;
use eswap::qstate::{haar_random_pure, partial_trace};
use eswap::shots::{
    build_calibration, pauli_settings, sample_measurement, tomography_2q, PauliData, ReadoutNoise, ShotBudget,
};

fn main() -> eswap::Result<()> {
    let state = haar_random_pure(2, 42);
    let noise = ReadoutNoise::uniform(2, 0.02, 0.04)?;
    let cal = build_calibration(&noise, 2, ShotBudget::Finite(8192), 7)?;
    println!("calibration condition number: {:.3}", cal.condition_number());

    let tables = pauli_settings(2)
        .iter()
        .enumerate()
        .map(|(k, s)| sample_measurement(&state, s, 8192, &noise, 100 + k as u64))
        .collect::<eswap::Result<Vec<_>>>()?;
    println!("first table: {}", tables[0]);

    let raw = tomography_2q(&PauliData::from_counts(&tables)?)?;
    let mitigated = tomography_2q(&PauliData::from_counts_mitigated(&tables, &cal)?)?;
    println!("fidelity raw       = {:.4}", raw.fidelity_with_pure(&state));
    println!("fidelity mitigated = {:.4}", mitigated.fidelity_with_pure(&state));
    println!(
        "concurrence: exact {:.4}, raw {:.4}, mitigated {:.4}",
        concurrence_mixed(&state.density())?,
        concurrence_mixed(&raw)?,
        concurrence_mixed(&mitigated)?
    );
    let rc = partial_trace(&mitigated, &[1])?;
    println!("reconstructed qubit-1 marginal:\n{}", rc.matrix());
    Ok(())
}
