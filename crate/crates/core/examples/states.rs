//! Pure states, gates, partial trace and Bloch vectors.
//!
//! cargo run --example states

use eswap::qstate::{bloch_of, hadamard, partial_trace, tensor, C64, PureState};

fn main() -> eswap::Result<()> {
    // Amplitudes are canonicalized: the first nonzero one is made real.
    let psi = PureState::new(vec![
        C64::from_polar(0.8f64.sqrt(), std::f64::consts::FRAC_PI_3),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.2f64.sqrt(), 0.0),
    ])?;
    println!("canonical amplitudes: {:?}", psi.amplitudes());

    // |+⟩ ⊗ |0⟩ then CNOT gives a Bell pair.
    let plus = PureState::basis(1, 0)?.apply_1q(0, &hadamard())?;
    let bell = tensor(&plus, &PureState::basis(1, 0)?).apply_cnot(0, 1)?;
    println!("bell amplitudes: {:?}", bell.amplitudes());

    for (name, state) in [("psi", &psi), ("bell", &bell)] {
        let rho = partial_trace(state, &[1])?;
        let b = bloch_of(&rho)?;
        println!("{name}: qubit 1 Bloch = ({:.4}, {:.4}, {:.4}), |r| = {:.4}", b.x, b.y, b.z, b.radius());
    }

    let rotated = psi.apply_rz(1, 1.0)?;
    println!("R_z keeps the norm: {:.15}", rotated.norm_sqr());
    Ok(())
}
