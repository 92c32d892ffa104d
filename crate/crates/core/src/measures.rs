//! Predictability, l1-coherence, concurrence and the complete complementarity
//! relation `P² + C² + E² = 1` for one qubit of a two-qubit pure state.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{partial_trace, DensityMatrix, PureState};

/// Eigenvalues of a tomographed state below this are treated as a
/// positivity violation rather than rounding.
pub const POSITIVITY_FLOOR: f64 = -1e-6;
/// Eigenvalues of `ρ` at or below this are excluded from its support.
const SUPPORT_FLOOR: f64 = 1e-13;

fn expect_qubits(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `|Tr(ρ σ_z)| = |ρ₀₀ − ρ₁₁|`.
pub fn predictability(rho: &DensityMatrix) -> Result<f64> {
    expect_qubits(rho.qubit_count(), 1)?;
    Ok((rho.entry(0, 0).re - rho.entry(1, 1).re).abs().min(1.0))
}

/// `2|ρ₀₁|`, the l1-norm coherence of a qubit.
pub fn l1_coherence(rho: &DensityMatrix) -> Result<f64> {
    expect_qubits(rho.qubit_count(), 1)?;
    Ok((2.0 * rho.entry(0, 1).norm()).min(1.0))
}

/// Raw `2|a₀₀a₁₁ − a₀₁a₁₀|` without clamping.
pub(crate) fn concurrence_pure_raw(state: &PureState) -> Result<f64> {
    expect_qubits(state.qubit_count(), 2)?;
    let a = state.amplitudes();
    Ok(2.0 * (a[0] * a[3] - a[1] * a[2]).norm())
}

/// Concurrence of a two-qubit pure state.
pub fn concurrence_pure(state: &PureState) -> Result<f64> {
    concurrence_pure_raw(state).map(|e| e.clamp(0.0, 1.0))
}

fn spin_flip() -> Matrix4<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let p = Complex64::new(1.0, 0.0);
    Matrix4::new(z, z, z, -p, z, z, p, z, z, p, z, z, -p, z, z, z)
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)` of a two-qubit state.
///
/// The λᵢ are the square roots of the eigenvalues of `√ρ ρ̃ √ρ` with
/// `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`. The product is evaluated on the support of
/// `ρ` only, so rank-deficient inputs (pure projectors, clamped tomography
/// output) do not pick up `√ε` contributions from rounding-level eigenvalues.
pub fn concurrence_mixed(rho: &DensityMatrix) -> Result<f64> {
    expect_qubits(rho.qubit_count(), 2)?;
    let m: Matrix4<Complex64> = Matrix4::from_fn(|i, j| rho.entry(i, j));
    let eig = m.symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < POSITIVITY_FLOOR {
        return Err(Error::NotPositive(min));
    }

    let support: Vec<usize> = (0..4).filter(|&k| eig.eigenvalues[k] > SUPPORT_FLOOR).collect();
    if support.is_empty() {
        return Ok(0.0);
    }
    // Columns √μₖ vₖ spanning the support of ρ.
    let scaled = DMatrix::from_fn(4, support.len(), |i, c| {
        let k = support[c];
        eig.eigenvectors[(i, k)] * eig.eigenvalues[k].sqrt()
    });
    let flip = spin_flip();
    let tilde = flip * m.conjugate() * flip;
    let tilde = DMatrix::from_fn(4, 4, |i, j| tilde[(i, j)]);
    let reduced = scaled.adjoint() * tilde * &scaled;
    // Symmetrize away rounding before the Hermitian eigensolver.
    let reduced = (&reduced + reduced.adjoint()) * Complex64::new(0.5, 0.0);

    let mut lambdas: Vec<f64> = reduced
        .symmetric_eigenvalues()
        .iter()
        .map(|&v| v.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let rest: f64 = lambdas.iter().skip(1).sum();
    Ok((lambdas[0] - rest).clamp(0.0, 1.0))
}

/// Predictability, coherence and entanglement of one qubit of a pure pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureTriple {
    pub predictability: f64,
    pub coherence: f64,
    pub entanglement: f64,
    /// `P² + C² + E² − 1` before clamping.
    pub ccr_residual: f64,
}

/// Complementarity triple for qubit `which` (0 or 1) of a two-qubit pure state.
pub fn measure_triple(state: &PureState, which: usize) -> Result<MeasureTriple> {
    expect_qubits(state.qubit_count(), 2)?;
    if which > 1 {
        return Err(Error::BadIndex { index: which, qubits: 2 });
    }
    let rho = partial_trace(state, &[which])?;
    let p = (rho.entry(0, 0).re - rho.entry(1, 1).re).abs();
    let c = 2.0 * rho.entry(0, 1).norm();
    let e = concurrence_pure_raw(state)?;
    Ok(MeasureTriple {
        predictability: p.clamp(0.0, 1.0),
        coherence: c.clamp(0.0, 1.0),
        entanglement: e.clamp(0.0, 1.0),
        ccr_residual: p * p + c * c + e * e - 1.0,
    })
}
