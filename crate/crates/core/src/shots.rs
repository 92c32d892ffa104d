//! Finite-shot emulation of the measurement side of the experiment.
//!
//! Everything here is a pure function of `(state, seed)`. Per-task seeds are
//! derived with [`derive_seed`], so independent settings can be sampled in any
//! order or in parallel without changing results.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::qstate::{hadamard, s_dagger, DensityMatrix, PureState, C64};
use crate::swap::BellOutcome;

pub const DEFAULT_SHOTS: u64 = 8192;
pub const DEFAULT_EPS01: f64 = 0.02;
pub const DEFAULT_EPS10: f64 = 0.04;
/// Calibration matrices with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Splits `(seed, stream)` into an independent sub-seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Readout flip probabilities of one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipRates {
    /// Probability that a true `0` is read as `1`.
    pub eps01: f64,
    /// Probability that a true `1` is read as `0`.
    pub eps10: f64,
}

impl FlipRates {
    /// Column-stochastic 2x2 confusion matrix, `M[read][true]`.
    pub fn confusion(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.eps01, self.eps10], [self.eps01, 1.0 - self.eps10]]
    }
}

/// Independent per-qubit readout noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutNoise {
    rates: Vec<FlipRates>,
}

impl ReadoutNoise {
    pub fn new(rates: Vec<FlipRates>) -> Result<Self> {
        for (q, r) in rates.iter().enumerate() {
            for (name, e) in [("eps01", r.eps01), ("eps10", r.eps10)] {
                if !(0.0..0.5).contains(&e) {
                    return Err(Error::InvalidNoise(format!("qubit {q}: {name} = {e} not in [0, 0.5)")));
                }
            }
        }
        Ok(Self { rates })
    }

    pub fn uniform(qubits: usize, eps01: f64, eps10: f64) -> Result<Self> {
        Self::new(vec![FlipRates { eps01, eps10 }; qubits])
    }

    pub fn noiseless(qubits: usize) -> Self {
        Self { rates: vec![FlipRates { eps01: 0.0, eps10: 0.0 }; qubits] }
    }

    pub fn qubit_count(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[FlipRates] {
        &self.rates
    }

    pub fn is_noiseless(&self) -> bool {
        self.rates.iter().all(|r| r.eps01 == 0.0 && r.eps10 == 0.0)
    }

    /// Noise restricted to the listed qubits, in the given order.
    pub fn select(&self, qubits: &[usize]) -> Self {
        Self { rates: qubits.iter().map(|&q| self.rates[q]).collect() }
    }

    fn expect_qubits(&self, n: usize) -> Result<()> {
        if self.rates.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.rates.len() });
        }
        Ok(())
    }

    /// Pushes an ideal outcome distribution through the readout channel.
    pub fn apply(&self, ideal: &[f64]) -> Vec<f64> {
        let n = self.rates.len();
        let mut dist = ideal.to_vec();
        for (q, r) in self.rates.iter().enumerate() {
            if r.eps01 == 0.0 && r.eps10 == 0.0 {
                continue;
            }
            let mask = 1usize << (n - 1 - q);
            let m = r.confusion();
            for i in (0..dist.len()).filter(|i| i & mask == 0) {
                let (p0, p1) = (dist[i], dist[i | mask]);
                dist[i] = m[0][0] * p0 + m[0][1] * p1;
                dist[i | mask] = m[1][0] * p0 + m[1][1] * p1;
            }
        }
        dist
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// The three non-identity Paulis in tomography order.
    pub const MEASURED: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
}

/// Parses a Pauli measurement setting such as `"XZ"`.
pub fn parse_basis(label: &str) -> Result<Vec<Pauli>> {
    label.chars().map(|c| Pauli::from_char(c).ok_or_else(|| Error::BadBasis(label.to_string()))).collect()
}

/// Rotates every qubit so that a computational readout measures the given
/// Pauli: X via H, Y via S† then H; Z and I are left alone.
pub fn rotate_to_basis(state: &PureState, basis: &[Pauli]) -> Result<PureState> {
    if basis.len() != state.qubit_count() {
        return Err(Error::DimensionMismatch { expected: state.qubit_count(), found: basis.len() });
    }
    let (h, sdg) = (hadamard(), s_dagger());
    let mut out = state.clone();
    for (q, p) in basis.iter().enumerate() {
        match p {
            Pauli::X => out = out.apply_1q(q, &h)?,
            Pauli::Y => out = out.apply_1q(q, &sdg)?.apply_1q(q, &h)?,
            Pauli::Z | Pauli::I => {}
        }
    }
    Ok(out)
}

/// Infinite-shot outcome distribution of a Pauli-setting measurement under
/// readout noise.
pub fn exact_distribution(state: &PureState, basis: &str, noise: &ReadoutNoise) -> Result<Vec<f64>> {
    let paulis = parse_basis(basis)?;
    noise.expect_qubits(state.qubit_count())?;
    let rotated = rotate_to_basis(state, &paulis)?;
    Ok(noise.apply(&rotated.probabilities()))
}

/// Outcome counts of one measurement setting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsTable {
    basis: String,
    qubits: usize,
    counts: Vec<u64>,
}

impl CountsTable {
    pub fn new(basis: impl Into<String>, qubits: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != 1usize << qubits {
            return Err(Error::DimensionMismatch { expected: qubits, found: counts.len().trailing_zeros() as usize });
        }
        Ok(Self { basis: basis.into(), qubits, counts })
    }

    pub fn basis(&self) -> &str {
        &self.basis
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts indexed by outcome (big-endian bit order, qubit 0 first).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bitstring(&self, index: usize) -> String {
        (0..self.qubits).map(|q| if (index >> (self.qubits - 1 - q)) & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn get(&self, bitstring: &str) -> Option<u64> {
        if bitstring.len() != self.qubits {
            return None;
        }
        let index = usize::from_str_radix(bitstring, 2).ok()?;
        self.counts.get(index).copied()
    }

    /// `(bitstring, count)` for every outcome, including zero counts.
    pub fn iter(&self) -> impl Iterator<Item = (String, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| (self.bitstring(i), c))
    }

    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.iter().collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.shots().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// Elementwise sum of tables of the same setting.
    pub fn merged<'a>(tables: impl IntoIterator<Item = &'a CountsTable>) -> Option<CountsTable> {
        let mut iter = tables.into_iter();
        let mut acc = iter.next()?.clone();
        for t in iter {
            for (a, b) in acc.counts.iter_mut().zip(&t.counts) {
                *a += b;
            }
        }
        Some(acc)
    }
}

impl fmt::Display for CountsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.basis)?;
        for (b, c) in self.iter().filter(|(_, c)| *c > 0) {
            write!(f, " {b}={c}")?;
        }
        Ok(())
    }
}

/// Multinomial draw via conditional binomials.
pub(crate) fn multinomial<R: rand::Rng + ?Sized>(dist: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; dist.len()];
    let mut remaining = shots;
    let mut mass: f64 = dist.iter().map(|p| p.max(0.0)).sum();
    for (k, &p) in dist.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        if k + 1 == dist.len() || mass <= p {
            out[k] = remaining;
            break;
        }
        let ratio = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, ratio).expect("ratio in [0, 1]").sample(rng);
        out[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    out
}

/// Samples `shots` readouts of `state` in a Pauli setting with readout noise.
///
/// Each shot is a Born-rule draw in the rotated basis followed by independent
/// bit flips; shots are i.i.d., so the whole table is drawn as one multinomial
/// over the noisy outcome distribution.
pub fn sample_measurement(state: &PureState, basis: &str, shots: u64, noise: &ReadoutNoise, seed: u64) -> Result<CountsTable> {
    if shots == 0 {
        return Err(Error::NoShots);
    }
    let dist = exact_distribution(state, basis, noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CountsTable::new(basis.to_ascii_uppercase(), state.qubit_count(), multinomial(&dist, shots, &mut rng))
}

/// Finite or infinite number of samples.
/// Samples `shots` readouts split into `blocks` independent tables whose
/// shot counts differ by at most one. Merging the blocks gives one run of
/// `shots` readouts; the split feeds block-wise error estimates.
pub fn sample_measurement_blocks(
    state: &PureState,
    basis: &str,
    shots: u64,
    noise: &ReadoutNoise,
    seed: u64,
    blocks: usize,
) -> Result<Vec<CountsTable>> {
    if shots == 0 {
        return Err(Error::NoShots);
    }
    let blocks = blocks.max(1);
    let dist = exact_distribution(state, basis, noise)?;
    let (base, extra) = (shots / blocks as u64, shots % blocks as u64);
    (0..blocks)
        .map(|b| {
            let n = base + u64::from((b as u64) < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, b as u64));
            CountsTable::new(basis.to_ascii_uppercase(), state.qubit_count(), multinomial(&dist, n, &mut rng))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotBudget {
    Finite(u64),
    Infinite,
}

/// Column-stochastic readout calibration matrix, `M[read][prepared]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMatrix {
    m: DMatrix<f64>,
    qubits: usize,
}

impl CalibrationMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        if dim != m.ncols() || dim < 2 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        for j in 0..dim {
            let col = m.column(j);
            if col.iter().any(|&v| !(0.0..=1.0).contains(&v)) || (col.sum() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidNoise(format!("calibration column {j} is not a probability vector")));
            }
        }
        Ok(Self { m, qubits: dim.trailing_zeros() as usize })
    }

    pub fn identity(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        Self { m: DMatrix::identity(dim, dim), qubits }
    }

    /// Exact matrix implied by a noise model.
    pub fn from_noise(noise: &ReadoutNoise) -> Self {
        let n = noise.qubit_count();
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            m.set_column(j, &DVector::from_vec(noise.apply(&e)));
        }
        Self { m, qubits: n }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Kronecker product; the qubits of `self` come first.
    pub fn tensor(&self, other: &CalibrationMatrix) -> CalibrationMatrix {
        CalibrationMatrix { m: self.m.kronecker(&other.m), qubits: self.qubits + other.qubits }
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.m.clone().singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// Prepares each computational basis state, reads it out under `noise`, and
/// stacks the outcome distributions as columns.
pub fn build_calibration(noise: &ReadoutNoise, qubits: usize, budget: ShotBudget, seed: u64) -> Result<CalibrationMatrix> {
    noise.expect_qubits(qubits)?;
    if let ShotBudget::Infinite = budget {
        return Ok(CalibrationMatrix::from_noise(noise));
    }
    let dim = 1usize << qubits;
    let z: String = "Z".repeat(qubits);
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let prepared = PureState::basis(qubits, j)?;
        let column = match budget {
            ShotBudget::Finite(shots) => sample_measurement(&prepared, &z, shots, noise, derive_seed(seed, j as u64))?.frequencies(),
            ShotBudget::Infinite => unreachable!(),
        };
        m.set_column(j, &DVector::from_vec(column));
    }
    CalibrationMatrix::new(m)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Solves `M p = raw` for a probability vector `p`.
///
/// When the exact inverse is already a probability vector it is returned as
/// is; otherwise the least-squares problem is solved over the simplex by
/// accelerated projected gradient.
pub fn mitigate_distribution(raw: &[f64], cal: &CalibrationMatrix) -> Result<Vec<f64>> {
    let dim = cal.m.nrows();
    if raw.len() != dim {
        return Err(Error::DimensionMismatch { expected: cal.qubits, found: raw.len().trailing_zeros() as usize });
    }
    let cond = cal.condition_number();
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::Singular(cond));
    }
    let b = DVector::from_column_slice(raw);
    let exact = cal.m.clone().lu().solve(&b).ok_or(Error::Singular(cond))?;
    if exact.iter().all(|&p| p >= 0.0) {
        let total = exact.sum();
        return Ok(exact.iter().map(|p| p / total).collect());
    }

    let mtm = cal.m.transpose() * &cal.m;
    let mtb = cal.m.transpose() * &b;
    let lipschitz = mtm.clone().symmetric_eigenvalues().iter().copied().fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let mut x = DVector::from_vec(project_simplex(exact.as_slice()));
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let grad = &mtm * &y - &mtb;
        let next = DVector::from_vec(project_simplex((&y - grad * step).as_slice()));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &next + (&next - &x) * ((t - 1.0) / t_next);
        let change = (&next - &x).amax();
        x = next;
        t = t_next;
        if change < 1e-15 {
            break;
        }
    }
    Ok(x.iter().copied().collect())
}

pub fn mitigate(counts: &CountsTable, cal: &CalibrationMatrix) -> Result<Vec<f64>> {
    if counts.qubit_count() != cal.qubit_count() {
        return Err(Error::DimensionMismatch { expected: cal.qubit_count(), found: counts.qubit_count() });
    }
    mitigate_distribution(&counts.frequencies(), cal)
}

/// Total-variation distance between two distributions.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Outcome distributions keyed by Pauli setting label (e.g. `"XZ"`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PauliData {
    qubits: usize,
    settings: BTreeMap<String, Vec<f64>>,
}

/// All full-weight Pauli settings on `qubits` qubits, `X < Y < Z` lexicographic.
pub fn pauli_settings(qubits: usize) -> Vec<String> {
    let mut labels = vec![String::new()];
    for _ in 0..qubits {
        labels = labels
            .into_iter()
            .flat_map(|l| Pauli::MEASURED.iter().map(move |p| format!("{l}{}", p.as_char())))
            .collect();
    }
    labels
}

impl PauliData {
    pub fn new(qubits: usize) -> Self {
        Self { qubits, settings: BTreeMap::new() }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn insert(&mut self, setting: &str, distribution: Vec<f64>) -> Result<()> {
        let paulis = parse_basis(setting)?;
        if paulis.len() != self.qubits || distribution.len() != 1usize << self.qubits {
            return Err(Error::DimensionMismatch { expected: self.qubits, found: paulis.len() });
        }
        self.settings.insert(setting.to_ascii_uppercase(), distribution);
        Ok(())
    }

    pub fn get(&self, setting: &str) -> Option<&[f64]> {
        self.settings.get(setting).map(Vec::as_slice)
    }

    /// Raw frequencies of each table.
    pub fn from_counts<'a>(tables: impl IntoIterator<Item = &'a CountsTable>) -> Result<Self> {
        Self::collect(tables, |t| Ok(t.frequencies()))
    }

    /// Mitigated distributions of each table.
    pub fn from_counts_mitigated<'a>(tables: impl IntoIterator<Item = &'a CountsTable>, cal: &CalibrationMatrix) -> Result<Self> {
        Self::collect(tables, |t| mitigate(t, cal))
    }

    fn collect<'a>(tables: impl IntoIterator<Item = &'a CountsTable>, f: impl Fn(&CountsTable) -> Result<Vec<f64>>) -> Result<Self> {
        let mut data: Option<PauliData> = None;
        for t in tables {
            let d = data.get_or_insert_with(|| PauliData::new(t.qubit_count()));
            d.insert(t.basis(), f(t)?)?;
        }
        data.ok_or_else(|| Error::MissingBasis("any".into()))
    }

    /// Infinite-shot data for every full-weight setting.
    pub fn exact(state: &PureState, noise: &ReadoutNoise) -> Result<Self> {
        let mut data = PauliData::new(state.qubit_count());
        for s in pauli_settings(state.qubit_count()) {
            let dist = exact_distribution(state, &s, noise)?;
            data.insert(&s, dist)?;
        }
        Ok(data)
    }

    /// `⟨P⟩` for a Pauli string that may contain identities. Identity
    /// positions are averaged over every stored setting that agrees on the
    /// non-identity positions.
    pub fn expectation(&self, pauli: &[Pauli]) -> Result<f64> {
        if pauli.len() != self.qubits {
            return Err(Error::DimensionMismatch { expected: self.qubits, found: pauli.len() });
        }
        let n = self.qubits;
        let support: Vec<usize> = (0..n).filter(|&q| pauli[q] != Pauli::I).collect();
        if support.is_empty() {
            return Ok(1.0);
        }
        let mut total = 0.0;
        let mut used = 0usize;
        for (label, dist) in &self.settings {
            let chars: Vec<Pauli> = parse_basis(label)?;
            if support.iter().any(|&q| chars[q] != pauli[q]) {
                continue;
            }
            let value: f64 = dist
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let parity = support.iter().map(|&q| (k >> (n - 1 - q)) & 1).sum::<usize>() & 1;
                    if parity == 0 {
                        *p
                    } else {
                        -*p
                    }
                })
                .sum();
            total += value;
            used += 1;
        }
        if used == 0 {
            let label: String = pauli.iter().map(|p| if *p == Pauli::I { 'Z' } else { p.as_char() }).collect();
            return Err(Error::MissingBasis(label));
        }
        Ok(total / used as f64)
    }

    fn require(&self, settings: &[String]) -> Result<()> {
        for s in settings {
            if !self.settings.contains_key(s) {
                return Err(Error::MissingBasis(s.clone()));
            }
        }
        Ok(())
    }
}

fn pauli_matrix(p: Pauli) -> DMatrix<C64> {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Linear-inversion estimate `2^{-n} Σ_P ⟨P⟩ P` (not yet projected).
pub fn linear_inversion(data: &PauliData) -> Result<DMatrix<C64>> {
    let n = data.qubit_count();
    data.require(&pauli_settings(n))?;
    let dim = 1usize << n;
    let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for code in 0..4usize.pow(n as u32) {
        let string: Vec<Pauli> = (0..n).map(|q| all[(code >> (2 * (n - 1 - q))) & 3]).collect();
        let value = data.expectation(&string)?;
        let op = string
            .iter()
            .skip(1)
            .fold(pauli_matrix(string[0]), |acc, &p| acc.kronecker(&pauli_matrix(p)));
        rho += op * C64::new(value / dim as f64, 0.0);
    }
    Ok(rho)
}

/// Closest density matrix in Frobenius norm: Hermitizes, then removes
/// negative eigenvalues and spreads their weight evenly over the rest.
///
/// Clamping and renormalizing instead would shrink the leading eigenvalue,
/// biasing purity and concurrence of near-pure estimates downward.
pub fn project_to_physical(m: &DMatrix<C64>) -> DensityMatrix {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let dim = m.nrows();
    let trace: f64 = eig.eigenvalues.iter().sum();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k] / trace).collect();
    let (mut kept, mut spill) = (dim, 0.0);
    while kept > 0 && vals[kept - 1] + spill / kept as f64 <= 0.0 {
        spill += vals[kept - 1];
        vals[kept - 1] = 0.0;
        kept -= 1;
    }
    for v in &mut vals[..kept] {
        *v += spill / kept as f64;
    }
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for (&k, &w) in order.iter().zip(&vals) {
        if w <= 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        rho += (v * v.adjoint()) * C64::new(w, 0.0);
    }
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::from_matrix_unchecked(rho)
}

/// One-qubit state tomography from X, Y and Z data.
pub fn tomography_1q(data: &PauliData) -> Result<DensityMatrix> {
    if data.qubit_count() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: data.qubit_count() });
    }
    Ok(project_to_physical(&linear_inversion(data)?))
}

/// Two-qubit state tomography from all nine two-letter settings.
pub fn tomography_2q(data: &PauliData) -> Result<DensityMatrix> {
    if data.qubit_count() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: data.qubit_count() });
    }
    Ok(project_to_physical(&linear_inversion(data)?))
}

/// Qubit order of the four-qubit global state.
pub const QUBIT_A: usize = 0;
pub const QUBIT_C: usize = 1;
pub const QUBIT_CP: usize = 2;
pub const QUBIT_B: usize = 3;

/// Inverse Bell transform on `(C, C′)`: CNOT(C→C′) followed by H on C.
pub fn bell_basis_change(global: &PureState) -> Result<PureState> {
    if global.qubit_count() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: global.qubit_count() });
    }
    global.apply_cnot(QUBIT_C, QUBIT_CP)?.apply_1q(QUBIT_C, &hadamard())
}

/// Bell-outcome probabilities by direct projection of `(C, C′)`.
pub fn bell_outcome_probabilities(global: &PureState) -> Result<[f64; 4]> {
    if global.qubit_count() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: global.qubit_count() });
    }
    let g = global.amplitudes();
    Ok(BellOutcome::ALL.map(|o| {
        let bell = o.amplitudes();
        let mut total = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..2 {
                    for cp in 0..2 {
                        acc += g[(a << 3) | (c << 2) | (cp << 1) | b] * bell[(c << 1) | cp];
                    }
                }
                total += acc.norm_sqr();
            }
        }
        total
    }))
}

/// Split a four-qubit readout index into `(outcome, AB index)`.
fn split_readout(k: usize) -> (BellOutcome, usize) {
    let bit = |q: usize| (k >> (3 - q)) & 1;
    (BellOutcome::from_readout_bits(bit(QUBIT_C), bit(QUBIT_CP)), (bit(QUBIT_A) << 1) | bit(QUBIT_B))
}

/// Bell-basis measurement on `(C, C′)` with post-selection.
///
/// Every run measures the rotated four-qubit register: `(C, C′)` in Z after the
/// inverse Bell transform and `(A, B)` in a caller-chosen Pauli setting.
/// Shots are grouped by the (possibly misread) Bell outcome.
#[derive(Debug, Clone)]
pub struct BellSampler {
    rotated: PureState,
    shots: u64,
    noise: ReadoutNoise,
    seed: u64,
    allocation: [u64; 4],
}

/// Per-outcome `AB` tables of one run.
pub type ConditionalCounts = [CountsTable; 4];

pub fn bell_measure_and_postselect(global: &PureState, shots: u64, noise: &ReadoutNoise, seed: u64) -> Result<BellSampler> {
    if shots == 0 {
        return Err(Error::NoShots);
    }
    noise.expect_qubits(4)?;
    let rotated = bell_basis_change(global)?;
    let mut sampler = BellSampler { rotated, shots, noise: noise.clone(), seed, allocation: [0; 4] };
    let groups = sampler.conditional_counts("ZZ")?;
    sampler.allocation = [0, 1, 2, 3].map(|i| groups[i].shots());
    Ok(sampler)
}

impl BellSampler {
    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Shots per Bell outcome in the reference (`ZZ` on `AB`) run.
    pub fn allocation(&self) -> [u64; 4] {
        self.allocation
    }

    /// Noisy four-qubit readout distribution for an `AB` setting.
    fn readout_distribution(&self, ab_setting: &[Pauli]) -> Result<Vec<f64>> {
        let basis = [ab_setting[0], Pauli::Z, Pauli::Z, ab_setting[1]];
        let rotated = rotate_to_basis(&self.rotated, &basis)?;
        Ok(self.noise.apply(&rotated.probabilities()))
    }

    fn parse_setting(ab_setting: &str) -> Result<Vec<Pauli>> {
        let paulis = parse_basis(ab_setting)?;
        if paulis.len() != 2 {
            return Err(Error::BadBasis(ab_setting.to_string()));
        }
        Ok(paulis)
    }

    fn stream(ab_setting: &[Pauli]) -> u64 {
        ab_setting.iter().fold(0u64, |acc, p| acc * 4 + *p as u64)
    }

    fn group(&self, label: &str, counts: &[u64]) -> ConditionalCounts {
        let mut groups = [[0u64; 4]; 4];
        for (k, &c) in counts.iter().enumerate() {
            let (o, ab) = split_readout(k);
            groups[o.index()][ab] += c;
        }
        groups.map(|g| CountsTable::new(label, 2, g.to_vec()).expect("two-qubit table"))
    }

    /// One `shots`-shot run with `AB` measured in `ab_setting`, grouped by
    /// Bell outcome.
    pub fn conditional_counts(&self, ab_setting: &str) -> Result<ConditionalCounts> {
        let mut blocks = self.conditional_blocks(ab_setting, 1)?;
        Ok(blocks.remove(0))
    }

    /// The same run split into `blocks` equal independent sub-runs (used for
    /// jackknife error bars). Block sizes differ by at most one shot.
    pub fn conditional_blocks(&self, ab_setting: &str, blocks: usize) -> Result<Vec<ConditionalCounts>> {
        let paulis = Self::parse_setting(ab_setting)?;
        let label: String = paulis.iter().map(|p| p.as_char()).collect();
        let dist = self.readout_distribution(&paulis)?;
        let blocks = blocks.max(1) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, Self::stream(&paulis)));
        Ok((0..blocks)
            .map(|b| {
                let shots = self.shots / blocks + u64::from(b < self.shots % blocks);
                self.group(&label, &multinomial(&dist, shots, &mut rng))
            })
            .collect())
    }

    /// Infinite-shot per-outcome `AB` distributions (joint with the outcome,
    /// i.e. each sums to the outcome's readout probability).
    pub fn exact_conditional(&self, ab_setting: &str) -> Result<[Vec<f64>; 4]> {
        let paulis = Self::parse_setting(ab_setting)?;
        let dist = self.readout_distribution(&paulis)?;
        let mut groups = [vec![0.0; 4], vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]];
        for (k, p) in dist.iter().enumerate() {
            let (o, ab) = split_readout(k);
            groups[o.index()][ab] += p;
        }
        Ok(groups)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{l1_coherence, predictability};
    use crate::qstate::{haar_random_pure, partial_trace, tensor};
    use crate::swap::decompose;
    use approx::assert_abs_diff_eq;

    fn three_sigma(p: f64, n: u64) -> f64 {
        3.0 * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn seeds_split_deterministically() {
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
    }

    #[test]
    fn noise_validation() {
        assert!(ReadoutNoise::uniform(1, 0.5, 0.0).is_err());
        assert!(ReadoutNoise::uniform(1, -0.1, 0.0).is_err());
        assert!(ReadoutNoise::uniform(2, 0.49, 0.0).is_ok());
    }

    #[test]
    fn zero_state_reads_zero() {
        let s = PureState::basis(1, 0).unwrap();
        let t = sample_measurement(&s, "Z", 1000, &ReadoutNoise::noiseless(1), 1).unwrap();
        assert_eq!(t.get("0"), Some(1000));
        assert_eq!(t.get("1"), Some(0));
        assert_eq!(t.shots(), 1000);
    }

    #[test]
    fn bell_zz_statistics() {
        let bell = BellOutcome::PhiPlus.state();
        let t = sample_measurement(&bell, "ZZ", 8192, &ReadoutNoise::noiseless(2), 5).unwrap();
        assert_eq!(t.get("01"), Some(0));
        assert_eq!(t.get("10"), Some(0));
        let f = t.get("00").unwrap() as f64 / 8192.0;
        assert!((f - 0.5).abs() <= three_sigma(0.5, 8192));
    }

    #[test]
    fn injected_flip_rate_is_observed() {
        let s = PureState::basis(1, 0).unwrap();
        let noise = ReadoutNoise::uniform(1, 0.05, 0.0).unwrap();
        let t = sample_measurement(&s, "Z", 100_000, &noise, 9).unwrap();
        let f = t.get("1").unwrap() as f64 / 1e5;
        assert!((f - 0.05).abs() <= three_sigma(0.05, 100_000), "{f}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = haar_random_pure(2, 4);
        let noise = ReadoutNoise::uniform(2, 0.02, 0.04).unwrap();
        let a = sample_measurement(&s, "XY", 4096, &noise, 77).unwrap();
        let b = sample_measurement(&s, "XY", 4096, &noise, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_map().len(), 4);
    }

    #[test]
    fn bad_basis_is_rejected() {
        let s = PureState::basis(1, 0).unwrap();
        assert!(matches!(sample_measurement(&s, "Q", 10, &ReadoutNoise::noiseless(1), 0), Err(Error::BadBasis(_))));
        assert!(matches!(sample_measurement(&s, "ZZ", 10, &ReadoutNoise::noiseless(1), 0), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(sample_measurement(&s, "Z", 0, &ReadoutNoise::noiseless(1), 0), Err(Error::NoShots)));
    }

    #[test]
    fn basis_rotations_measure_the_right_pauli() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::from_real(&[h, h]).unwrap();
        let plus_i = PureState::new(vec![C64::new(h, 0.0), C64::new(0.0, h)]).unwrap();
        let none = ReadoutNoise::noiseless(1);
        assert_abs_diff_eq!(exact_distribution(&plus, "X", &none).unwrap()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(exact_distribution(&plus_i, "Y", &none).unwrap()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(exact_distribution(&plus_i, "X", &none).unwrap()[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn calibration_examples() {
        let none = ReadoutNoise::noiseless(2);
        let cal = build_calibration(&none, 2, ShotBudget::Finite(1000), 3).unwrap();
        assert_eq!(cal.matrix(), &DMatrix::identity(4, 4));

        let noise = ReadoutNoise::uniform(1, 0.03, 0.08).unwrap();
        let cal = build_calibration(&noise, 1, ShotBudget::Infinite, 0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.97, 0.08, 0.03, 0.92]);
        assert!((cal.matrix() - expected).amax() < 1e-15);

        let noise2 = ReadoutNoise::new(vec![FlipRates { eps01: 0.03, eps10: 0.08 }, FlipRates { eps01: 0.01, eps10: 0.05 }]).unwrap();
        let joint = build_calibration(&noise2, 2, ShotBudget::Infinite, 0).unwrap();
        let product = CalibrationMatrix::from_noise(&noise2.select(&[0])).tensor(&CalibrationMatrix::from_noise(&noise2.select(&[1])));
        assert!((joint.matrix() - product.matrix()).amax() < 1e-15);
    }

    #[test]
    fn finite_calibration_is_close_to_exact() {
        let noise = ReadoutNoise::uniform(2, 0.02, 0.04).unwrap();
        let cal = build_calibration(&noise, 2, ShotBudget::Finite(100_000), 8).unwrap();
        let exact = CalibrationMatrix::from_noise(&noise);
        assert!((cal.matrix() - exact.matrix()).amax() < 0.005);
    }

    #[test]
    fn identity_mitigation_returns_frequencies() {
        let t = CountsTable::new("ZZ", 2, vec![10, 20, 30, 40]).unwrap();
        let p = mitigate(&t, &CalibrationMatrix::identity(2)).unwrap();
        assert_eq!(p, vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn exact_inverse_is_recovered() {
        let noise = ReadoutNoise::uniform(2, 0.02, 0.04).unwrap();
        let cal = CalibrationMatrix::from_noise(&noise);
        let ideal = [0.1, 0.2, 0.3, 0.4];
        let raw = noise.apply(&ideal);
        let p = mitigate_distribution(&raw, &cal).unwrap();
        for (a, b) in p.iter().zip(ideal) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn constrained_solution_stays_on_simplex() {
        let noise = ReadoutNoise::uniform(1, 0.1, 0.2).unwrap();
        let cal = CalibrationMatrix::from_noise(&noise);
        // Observed "1" less often than the noise floor: inverse would be negative.
        let p = mitigate_distribution(&[0.95, 0.05], &cal).unwrap();
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn singular_calibration_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let cal = CalibrationMatrix::new(m).unwrap();
        assert!(matches!(mitigate_distribution(&[0.5, 0.5], &cal), Err(Error::Singular(_))));
    }

    #[test]
    fn simplex_projection_basics() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        let p = project_simplex(&[1.5, -0.2, 0.1]);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn settings_enumeration() {
        assert_eq!(pauli_settings(1), vec!["X", "Y", "Z"]);
        let two = pauli_settings(2);
        assert_eq!(two.len(), 9);
        assert_eq!(two[0], "XX");
        assert_eq!(two[8], "ZZ");
    }

    #[test]
    fn exact_tomography_of_zero_state() {
        let zero = PureState::basis(1, 0).unwrap();
        let rho = tomography_1q(&PauliData::exact(&zero, &ReadoutNoise::noiseless(1)).unwrap()).unwrap();
        assert!(rho.max_abs_diff(&zero.density()) < 1e-15);
    }

    #[test]
    fn exact_tomography_of_hadamard_marginal() {
        // Marginal of √p|++⟩ + √(1−p)|−−⟩ on C: P = 0, C = |2p − 1|.
        let p: f64 = 0.85;
        let (a, b) = (p.sqrt() * 0.5, (1.0f64 - p).sqrt() * 0.5);
        let xi = PureState::from_real(&[a + b, a - b, a - b, a + b]).unwrap();
        let data = PauliData::exact(&xi, &ReadoutNoise::noiseless(2)).unwrap();
        let rho = tomography_2q(&data).unwrap();
        let rc = partial_trace(&rho, &[1]).unwrap();
        assert_abs_diff_eq!(l1_coherence(&rc).unwrap(), (2.0 * p - 1.0f64).abs(), epsilon = 1e-12);
        assert_abs_diff_eq!(predictability(&rc).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_tomography_of_bell_state() {
        let bell = BellOutcome::PhiPlus.state();
        let rho = tomography_2q(&PauliData::exact(&bell, &ReadoutNoise::noiseless(2)).unwrap()).unwrap();
        assert!(rho.max_abs_diff(&bell.density()) < 1e-12);
    }

    #[test]
    fn missing_settings_are_reported() {
        let mut data = PauliData::new(1);
        data.insert("X", vec![0.5, 0.5]).unwrap();
        data.insert("Z", vec![1.0, 0.0]).unwrap();
        assert!(matches!(tomography_1q(&data), Err(Error::MissingBasis(s)) if s == "Y"));
        let two = PauliData::new(2);
        assert!(matches!(tomography_2q(&two), Err(Error::MissingBasis(_))));
    }

    #[test]
    fn projection_clamps_unphysical_estimates() {
        // ⟨X⟩ = ⟨Z⟩ = 1 is outside the Bloch ball.
        let mut data = PauliData::new(1);
        data.insert("X", vec![1.0, 0.0]).unwrap();
        data.insert("Y", vec![0.5, 0.5]).unwrap();
        data.insert("Z", vec![1.0, 0.0]).unwrap();
        let rho = tomography_1q(&data).unwrap();
        assert!(rho.min_eigenvalue() >= -1e-15);
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn basis_change_and_direct_projection_agree() {
        for seed in 0..50 {
            let (xi, eta) = (haar_random_pure(2, 2 * seed), haar_random_pure(2, 2 * seed + 1));
            let global = tensor(&xi, &eta);
            let direct = bell_outcome_probabilities(&global).unwrap();
            let oracle = decompose(&xi, &eta).unwrap();
            let sampler = bell_measure_and_postselect(&global, 10, &ReadoutNoise::noiseless(4), 0).unwrap();
            let exact = sampler.exact_conditional("ZZ").unwrap();
            for o in BellOutcome::ALL {
                let via_circuit: f64 = exact[o.index()].iter().sum();
                assert_abs_diff_eq!(via_circuit, direct[o.index()], epsilon = 1e-14);
                assert_abs_diff_eq!(direct[o.index()], oracle.probability(o), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn bell_sampler_symmetric_input() {
        let bell = BellOutcome::PhiPlus.state();
        let global = tensor(&bell, &bell);
        let sampler = bell_measure_and_postselect(&global, 8192, &ReadoutNoise::noiseless(4), 21).unwrap();
        let alloc = sampler.allocation();
        assert_eq!(alloc.iter().sum::<u64>(), 8192);
        for n in alloc {
            assert!((n as f64 / 8192.0 - 0.25).abs() <= three_sigma(0.25, 8192));
        }
        let groups = sampler.conditional_counts("XY").unwrap();
        assert_eq!(groups.iter().map(CountsTable::shots).sum::<u64>(), 8192);
        let blocks = sampler.conditional_blocks("XY", 7).unwrap();
        let total: u64 = blocks.iter().flat_map(|b| b.iter().map(CountsTable::shots)).sum();
        assert_eq!(total, 8192);
    }

    #[test]
    fn post_selected_branch_reconstructs_bell_state() {
        let bell = BellOutcome::PhiPlus.state();
        let global = tensor(&bell, &bell);
        let sampler = bell_measure_and_postselect(&global, 8, &ReadoutNoise::noiseless(4), 0).unwrap();
        for o in BellOutcome::ALL {
            let mut data = PauliData::new(2);
            for s in pauli_settings(2) {
                let joint = &sampler.exact_conditional(&s).unwrap()[o.index()];
                let total: f64 = joint.iter().sum();
                data.insert(&s, joint.iter().map(|p| p / total).collect()).unwrap();
            }
            let rho = tomography_2q(&data).unwrap();
            // Branch o of Φ+⊗Φ+ leaves AB in the Bell state o.
            assert!(rho.max_abs_diff(&o.state().density()) < 1e-12, "{o}");
        }
    }
}
