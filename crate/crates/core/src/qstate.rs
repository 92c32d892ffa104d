//! Small dense state vectors and density matrices.
//!
//! Basis ordering is big-endian: for an `n`-qubit register, qubit `0` is the
//! most significant bit of the amplitude index. A two-qubit state written as
//! `c_ac |ac⟩` therefore stores `c_ac` at index `2a + c`.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on the squared norm of user-supplied amplitudes.
pub const INPUT_NORM_TOL: f64 = 1e-9;
/// Tolerance used for internal invariants (norm, trace, hermiticity).
pub const INTERNAL_TOL: f64 = 1e-12;
/// Amplitudes with modulus at or below this are skipped when fixing global phase.
const PHASE_FLOOR: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Bit position of `qubit` inside an amplitude index of an `n`-qubit register.
#[inline]
fn bit_of(qubit: usize, n: usize) -> usize {
    n - 1 - qubit
}

/// Multiplies every amplitude by the phase that makes the first non-negligible
/// amplitude real and nonnegative.
fn canonicalize_phase(amps: &mut [C64]) {
    if let Some(lead) = amps.iter().find(|a| a.norm() > PHASE_FLOOR) {
        let phase = lead.conj() / lead.norm();
        for a in amps.iter_mut() {
            *a *= phase;
        }
        // The leading entry is real up to rounding; make it exactly so.
        if let Some(lead) = amps.iter_mut().find(|a| a.norm() > PHASE_FLOOR) {
            *lead = C64::new(lead.norm(), 0.0);
        }
    }
}

/// A normalized pure state of `n` qubits with a canonical global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
    qubits: usize,
}

impl PureState {
    /// Builds a state from raw amplitudes.
    ///
    /// Amplitudes whose squared norm is within [`INPUT_NORM_TOL`] of one are
    /// renormalized; the global phase is then canonicalized.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let qubits = qubits_for_dim(amps.len())?;
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr < INPUT_NORM_TOL {
            return Err(Error::ZeroNorm(norm_sqr));
        }
        if (norm_sqr - 1.0).abs() > INPUT_NORM_TOL {
            return Err(Error::NotNormalizable(norm_sqr));
        }
        Ok(Self::from_unnormalized(amps, qubits))
    }

    /// Normalizes any nonzero vector. Used internally where the norm is known
    /// to be meaningful (projected branches, sampled Gaussians).
    pub(crate) fn from_unnormalized(mut amps: Vec<C64>, qubits: usize) -> Self {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in amps.iter_mut() {
            *a /= norm;
        }
        canonicalize_phase(&mut amps);
        Self { amps, qubits }
    }

    /// Normalizes an arbitrary nonzero vector, failing only on (near) zero norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let qubits = qubits_for_dim(amps.len())?;
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr < INPUT_NORM_TOL {
            return Err(Error::ZeroNorm(norm_sqr));
        }
        Ok(Self::from_unnormalized(amps, qubits))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Computational basis state `|index⟩` on `qubits` qubits.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        if qubits == 0 || index >= dim {
            return Err(Error::BadIndex { index, qubits });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { amps, qubits })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Born probabilities of the computational basis outcomes.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn density(&self) -> DensityMatrix {
        let m = DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.amps[i] * self.amps[j].conj());
        DensityMatrix { m, qubits: self.qubits }
    }

    /// Largest entrywise amplitude difference to `other` (both canonical).
    pub fn max_abs_diff(&self, other: &PureState) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `1 - |⟨self|other⟩|²`; zero when the states agree up to phase.
    pub fn infidelity(&self, other: &PureState) -> f64 {
        let overlap: C64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        1.0 - overlap.norm_sqr()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.qubits {
            return Err(Error::BadIndex { index: qubit, qubits: self.qubits });
        }
        Ok(())
    }

    /// Applies a 2x2 unitary to one qubit.
    pub fn apply_1q(&self, qubit: usize, gate: &Matrix2<C64>) -> Result<PureState> {
        self.check_qubit(qubit)?;
        let mask = 1usize << bit_of(qubit, self.qubits);
        let mut out = self.amps.clone();
        for i in (0..self.dim()).filter(|i| i & mask == 0) {
            let (a0, a1) = (self.amps[i], self.amps[i | mask]);
            out[i] = gate[(0, 0)] * a0 + gate[(0, 1)] * a1;
            out[i | mask] = gate[(1, 0)] * a0 + gate[(1, 1)] * a1;
        }
        canonicalize_phase(&mut out);
        Ok(PureState { amps: out, qubits: self.qubits })
    }

    /// Controlled-NOT with the given control and target qubits.
    pub fn apply_cnot(&self, control: usize, target: usize) -> Result<PureState> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::BadIndex { index: target, qubits: self.qubits });
        }
        let cmask = 1usize << bit_of(control, self.qubits);
        let tmask = 1usize << bit_of(target, self.qubits);
        let mut out = self.amps.clone();
        for i in (0..self.dim()).filter(|i| i & cmask != 0 && i & tmask == 0) {
            out.swap(i, i | tmask);
        }
        Ok(PureState { amps: out, qubits: self.qubits })
    }

    /// `R_z(angle) = diag(e^{-i angle/2}, e^{+i angle/2})` on one qubit.
    pub fn apply_rz(&self, qubit: usize, angle: f64) -> Result<PureState> {
        apply_rz(self, qubit, angle)
    }
}

/// Hadamard gate.
pub fn hadamard() -> Matrix2<C64> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    Matrix2::new(h, h, h, -h)
}

/// Phase gate `S† = diag(1, -i)`.
pub fn s_dagger() -> Matrix2<C64> {
    Matrix2::new(ONE, ZERO, ZERO, C64::new(0.0, -1.0))
}

/// `R_z(angle) = diag(e^{-i angle/2}, e^{+i angle/2})`.
pub fn rz(angle: f64) -> Matrix2<C64> {
    Matrix2::new(C64::from_polar(1.0, -angle / 2.0), ZERO, ZERO, C64::from_polar(1.0, angle / 2.0))
}

/// A density matrix on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
    qubits: usize,
}

impl DensityMatrix {
    /// Validates hermiticity and unit trace (positivity is checked separately
    /// by consumers that need it, see [`DensityMatrix::min_eigenvalue`]).
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidDensity(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        let qubits = qubits_for_dim(m.nrows())?;
        let herm = hermiticity_defect(&m);
        if herm > INTERNAL_TOL {
            return Err(Error::InvalidDensity(format!("hermiticity defect {herm:e}")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > INTERNAL_TOL || tr.im.abs() > INTERNAL_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        Ok(Self { m, qubits })
    }

    /// Wraps a matrix the caller has already made Hermitian with unit trace.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        let qubits = m.nrows().trailing_zeros() as usize;
        Self { m, qubits }
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        let m = DMatrix::from_diagonal_element(dim, dim, C64::new(1.0 / dim as f64, 0.0));
        Self { m, qubits }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.m)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Largest entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.m - &other.m).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with_pure(&self, psi: &PureState) -> f64 {
        let a = psi.amplitudes();
        let mut acc = ZERO;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += a[i].conj() * self.m[(i, j)] * a[j];
            }
        }
        acc.re
    }
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Anything that can be reduced to a subset of its qubits.
pub trait Reducible {
    fn qubit_count(&self) -> usize;
    /// Entry `(row, col)` of the full density operator.
    fn rho_entry(&self, row: usize, col: usize) -> C64;
}

impl Reducible for PureState {
    fn qubit_count(&self) -> usize {
        self.qubits
    }
    fn rho_entry(&self, row: usize, col: usize) -> C64 {
        self.amps[row] * self.amps[col].conj()
    }
}

impl Reducible for DensityMatrix {
    fn qubit_count(&self) -> usize {
        self.qubits
    }
    fn rho_entry(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }
}

/// Builds a normalized two-qubit state `c00|00⟩ + c01|01⟩ + c10|10⟩ + c11|11⟩`.
pub fn make_pair_state(c00: C64, c01: C64, c10: C64, c11: C64) -> Result<PureState> {
    PureState::new(vec![c00, c01, c10, c11])
}

/// Tensor product; the qubits of `a` come first.
pub fn tensor(a: &PureState, b: &PureState) -> PureState {
    let mut amps = Vec::with_capacity(a.dim() * b.dim());
    for x in &a.amps {
        for y in &b.amps {
            amps.push(x * y);
        }
    }
    PureState { amps, qubits: a.qubits + b.qubits }
}

/// Partial trace keeping the qubits in `keep` (in ascending qubit order).
pub fn partial_trace<S: Reducible + ?Sized>(state: &S, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.qubit_count();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.is_empty() || kept.len() >= n || kept.iter().any(|&q| q >= n) {
        return Err(Error::BadSubset { keep: keep.to_vec(), qubits: n });
    }
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let k = kept.len();

    // Scatter the bits of `local` (big-endian over `qubits`) into a full index.
    let scatter = |local: usize, qubits: &[usize]| -> usize {
        let len = qubits.len();
        qubits.iter().enumerate().fold(0usize, |acc, (pos, &q)| {
            let bit = (local >> (len - 1 - pos)) & 1;
            acc | (bit << bit_of(q, n))
        })
    };

    let out_dim = 1usize << k;
    let env_dim = 1usize << traced.len();
    let row_index: Vec<usize> = (0..out_dim).map(|i| scatter(i, &kept)).collect();
    let env_index: Vec<usize> = (0..env_dim).map(|t| scatter(t, &traced)).collect();

    let m = DMatrix::from_fn(out_dim, out_dim, |i, j| {
        env_index
            .iter()
            .map(|&t| state.rho_entry(row_index[i] | t, row_index[j] | t))
            .sum()
    });
    Ok(DensityMatrix { m, qubits: k })
}

/// Bloch vector of a one-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn radius(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Polar angle in `[0, π]`; zero for the null vector.
    pub fn theta(&self) -> f64 {
        let r = self.radius();
        if r == 0.0 {
            0.0
        } else {
            (self.z / r).clamp(-1.0, 1.0).acos()
        }
    }

    /// Azimuthal angle in `[0, 2π)`, defined as 0 when `x = y = 0`.
    pub fn phi(&self) -> f64 {
        if self.x == 0.0 && self.y == 0.0 {
            return 0.0;
        }
        let phi = self.y.atan2(self.x);
        let phi = if phi < 0.0 { phi + TAU } else { phi };
        if phi >= TAU {
            0.0
        } else {
            phi
        }
    }

    /// `ρ = ½ [[1 + z, x − iy], [x + iy, 1 − z]]`.
    pub fn to_density(&self) -> DensityMatrix {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5 * (1.0 + self.z), 0.0),
                C64::new(0.5 * self.x, -0.5 * self.y),
                C64::new(0.5 * self.x, 0.5 * self.y),
                C64::new(0.5 * (1.0 - self.z), 0.0),
            ],
        );
        DensityMatrix { m, qubits: 1 }
    }
}

pub fn bloch_of(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.qubits != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: rho.qubits });
    }
    let off = rho.m[(0, 1)];
    Ok(BlochVector {
        x: 2.0 * off.re,
        y: -2.0 * off.im,
        z: (rho.m[(0, 0)] - rho.m[(1, 1)]).re,
    })
}

/// Applies `R_z(angle)` to `qubit`; `R_z(−φ)` is `angle = −φ`.
pub fn apply_rz(state: &PureState, qubit: usize, angle: f64) -> Result<PureState> {
    state.check_qubit(qubit)?;
    let mask = 1usize << bit_of(qubit, state.qubits);
    let on_zero = C64::from_polar(1.0, -angle / 2.0);
    let on_one = C64::from_polar(1.0, angle / 2.0);
    let mut amps: Vec<C64> = state
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| if i & mask == 0 { a * on_zero } else { a * on_one })
        .collect();
    canonicalize_phase(&mut amps);
    Ok(PureState { amps, qubits: state.qubits })
}

/// Haar-random pure state from the caller's generator.
pub fn haar_random_pure_with<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> PureState {
    assert!(qubits >= 1, "need at least one qubit");
    let dim = 1usize << qubits;
    loop {
        let amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-300 {
            return PureState::from_unnormalized(amps, qubits);
        }
    }
}

/// Haar-random pure state, deterministic for a fixed seed.
pub fn haar_random_pure(qubits: usize, seed: u64) -> PureState {
    haar_random_pure_with(qubits, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Haar-random element of U(2).
pub fn haar_random_unitary_2x2<R: Rng + ?Sized>(rng: &mut R) -> Matrix2<C64> {
    let v = haar_random_pure_with(1, rng);
    let (a, b) = (v.amps[0], v.amps[1]);
    let phase = C64::from_polar(1.0, rng.random_range(0.0..TAU));
    Matrix2::new(a, -b.conj() * phase, b, a.conj() * phase)
}
