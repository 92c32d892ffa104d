//! Predictability, coherence and entanglement of one qubit of a pair:
//! P² + C² + E² = 1 for every pure two-qubit state.
//!
//! cargo run --example complementarity

use eswap::measures::{concurrence_mixed, measure_triple};
use eswap::qstate::{haar_random_pure, DensityMatrix, C64};
use nalgebra::DMatrix;

fn main() -> eswap::Result<()> {
    println!("{:>6} {:>8} {:>8} {:>8} {:>10}", "seed", "P", "C", "E", "residual");
    for seed in 0..5 {
        let t = measure_triple(&haar_random_pure(2, seed), 1)?;
        println!(
            "{seed:>6} {:>8.4} {:>8.4} {:>8.4} {:>10.1e}",
            t.predictability, t.coherence, t.entanglement, t.ccr_residual
        );
    }

    // Mixed states: the Werner family w|Φ+⟩⟨Φ+| + (1−w)I/4 has E = max(0, (3w−1)/2).
    for w in [0.2, 1.0 / 3.0, 0.6, 1.0] {
        let mut m = DMatrix::<C64>::identity(4, 4) * C64::new((1.0 - w) / 4.0, 0.0);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] += C64::new(w / 2.0, 0.0);
        }
        let rho = DensityMatrix::new(m)?;
        println!("werner w = {w:.3}: E = {:.4}", concurrence_mixed(&rho)?);
    }
    Ok(())
}
