//! Entanglement swapping of two pure pairs `|ξ⟩_AC ⊗ |η⟩_C'B` by a Bell-basis
//! measurement on `(C, C′)`.
//!
//! [`decompose`] is the literal construction: it forms the four-qubit state in
//! the order `(A, C, C′, B)`, projects `(C, C′)` onto each Bell state and reads
//! off the `AB` branch. [`analytic_concurrences`] predicts the branch
//! concurrences from the local predictabilities and coherences of `C` and
//! `C′` alone; the prediction holds for phase-aligned inputs (see
//! [`align_phases`]), which [`predict_and_verify`] checks against the literal
//! construction.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::measures::{concurrence_pure, l1_coherence, predictability};
use crate::qstate::{apply_rz, bloch_of, partial_trace, tensor, BlochVector, PureState, C64};

/// Branches with probability below this carry no post-measurement state.
pub const P_MIN: f64 = 1e-9;
/// Bloch z-components with magnitude at or below this count as zero when
/// taking signs.
pub const SIGN_TOL: f64 = 1e-12;
/// Tolerance on `P² + C² ≤ 1` for analytic inputs.
const PC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short machine-friendly name, e.g. `phi_plus`.
    pub fn key(self) -> &'static str {
        match self {
            BellOutcome::PhiPlus => "phi_plus",
            BellOutcome::PhiMinus => "phi_minus",
            BellOutcome::PsiPlus => "psi_plus",
            BellOutcome::PsiMinus => "psi_minus",
        }
    }

    /// Amplitudes on `|00⟩, |01⟩, |10⟩, |11⟩` of `(C, C′)`.
    pub fn amplitudes(self) -> [f64; 4] {
        let h = FRAC_1_SQRT_2;
        match self {
            BellOutcome::PhiPlus => [h, 0.0, 0.0, h],
            BellOutcome::PhiMinus => [h, 0.0, 0.0, -h],
            BellOutcome::PsiPlus => [0.0, h, h, 0.0],
            BellOutcome::PsiMinus => [0.0, h, -h, 0.0],
        }
    }

    pub fn state(self) -> PureState {
        PureState::from_real(&self.amplitudes()).expect("Bell states are normalized")
    }

    /// Computational readout `(c, c′)` after CNOT(C→C′) then H(C).
    pub fn readout_bits(self) -> (usize, usize) {
        match self {
            BellOutcome::PhiPlus => (0, 0),
            BellOutcome::PhiMinus => (1, 0),
            BellOutcome::PsiPlus => (0, 1),
            BellOutcome::PsiMinus => (1, 1),
        }
    }

    pub fn from_readout_bits(c: usize, cp: usize) -> BellOutcome {
        match (c & 1, cp & 1) {
            (0, 0) => BellOutcome::PhiPlus,
            (1, 0) => BellOutcome::PhiMinus,
            (0, 1) => BellOutcome::PsiPlus,
            _ => BellOutcome::PsiMinus,
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BellOutcome::PhiPlus => "Φ+",
            BellOutcome::PhiMinus => "Φ−",
            BellOutcome::PsiPlus => "Ψ+",
            BellOutcome::PsiMinus => "Ψ−",
        };
        f.write_str(s)
    }
}

/// One Bell outcome of the swap.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeBranch {
    pub outcome: BellOutcome,
    pub probability: f64,
    /// Normalized `AB` state; `None` when `probability < P_MIN`.
    pub post_state: Option<PureState>,
    pub post_concurrence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapResult {
    pub branches: [OutcomeBranch; 4],
    /// Non-selective average `Σ Pr(o)·E(o)` over present branches.
    pub averaged_concurrence: f64,
}

impl SwapResult {
    pub fn branch(&self, outcome: BellOutcome) -> &OutcomeBranch {
        &self.branches[outcome.index()]
    }

    pub fn probability(&self, outcome: BellOutcome) -> f64 {
        self.branch(outcome).probability
    }

    pub fn concurrence(&self, outcome: BellOutcome) -> Option<f64> {
        self.branch(outcome).post_concurrence
    }

    pub fn probability_sum(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }
}

fn expect_pair(state: &PureState) -> Result<()> {
    if state.qubit_count() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: state.qubit_count() });
    }
    Ok(())
}

/// Unnormalized `AB` branch for one Bell outcome of `(C, C′)`.
fn project_branch(global: &PureState, outcome: BellOutcome) -> [C64; 4] {
    let g = global.amplitudes();
    let bell = outcome.amplitudes();
    let mut ab = [C64::new(0.0, 0.0); 4];
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..2 {
                for cp in 0..2 {
                    // index over (A, C, C′, B), A most significant
                    acc += g[(a << 3) | (c << 2) | (cp << 1) | b] * bell[(c << 1) | cp];
                }
            }
            ab[(a << 1) | b] = acc;
        }
    }
    ab
}

/// Literal Bell-basis decomposition of `|ξ⟩_AC ⊗ |η⟩_C'B`.
pub fn decompose(xi: &PureState, eta: &PureState) -> Result<SwapResult> {
    expect_pair(xi)?;
    expect_pair(eta)?;
    let global = tensor(xi, eta);
    let mut average = 0.0;
    let branches = BellOutcome::ALL.map(|outcome| {
        let ab = project_branch(&global, outcome);
        let probability: f64 = ab.iter().map(|z| z.norm_sqr()).sum();
        let (post_state, post_concurrence) = if probability >= P_MIN {
            let state = PureState::from_unnormalized(ab.to_vec(), 2);
            let e = concurrence_pure(&state).expect("two-qubit branch");
            average += probability * e;
            (Some(state), Some(e))
        } else {
            (None, None)
        };
        OutcomeBranch { outcome, probability, post_state, post_concurrence }
    });
    Ok(SwapResult { branches, averaged_concurrence: average })
}

/// `E(ξ)·E(η)`, the average concurrence distributed to `AB`.
pub fn averaged_entanglement(xi: &PureState, eta: &PureState) -> Result<f64> {
    Ok(concurrence_pure(xi)? * concurrence_pure(eta)?)
}

/// Phase-aligned inputs and the azimuthal angles that were removed.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub xi: PureState,
    pub eta: PureState,
    /// Azimuth of the `C` marginal of the original `ξ`.
    pub phi_c: f64,
    /// Azimuth of the `C′` marginal of the original `η`.
    pub phi_cp: f64,
}

/// Rotates `C` (qubit 1 of `ξ`) and `C′` (qubit 0 of `η`) by `R_z(−φ)` so
/// that both marginals have real nonnegative off-diagonal entries.
pub fn align_phases(xi: &PureState, eta: &PureState) -> Result<AlignedPair> {
    expect_pair(xi)?;
    expect_pair(eta)?;
    let phi_c = bloch_of(&partial_trace(xi, &[1])?)?.phi();
    let phi_cp = bloch_of(&partial_trace(eta, &[0])?)?.phi();
    Ok(AlignedPair {
        xi: apply_rz(xi, 1, -phi_c)?,
        eta: apply_rz(eta, 0, -phi_cp)?,
        phi_c,
        phi_cp,
    })
}

/// Product of the Bloch-z signs of the two measured marginals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HemisphereSign {
    Opposite,
    Boundary,
    Same,
}

impl HemisphereSign {
    pub fn value(self) -> f64 {
        match self {
            HemisphereSign::Opposite => -1.0,
            HemisphereSign::Boundary => 0.0,
            HemisphereSign::Same => 1.0,
        }
    }

    pub fn from_i8(s: i8) -> Option<Self> {
        match s {
            -1 => Some(HemisphereSign::Opposite),
            0 => Some(HemisphereSign::Boundary),
            1 => Some(HemisphereSign::Same),
            _ => None,
        }
    }

    pub fn of(a: &BlochVector, b: &BlochVector) -> Self {
        match sgn(a.z) * sgn(b.z) {
            x if x > 0 => HemisphereSign::Same,
            x if x < 0 => HemisphereSign::Opposite,
            _ => HemisphereSign::Boundary,
        }
    }
}

fn sgn(x: f64) -> i8 {
    if x > SIGN_TOL {
        1
    } else if x < -SIGN_TOL {
        -1
    } else {
        0
    }
}

/// Local quantities of the two measured qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMeasures {
    pub p_c: f64,
    pub c_c: f64,
    pub p_cp: f64,
    pub c_cp: f64,
}

impl LocalMeasures {
    pub fn of(xi: &PureState, eta: &PureState) -> Result<(Self, HemisphereSign)> {
        let rc = partial_trace(xi, &[1])?;
        let rcp = partial_trace(eta, &[0])?;
        let local = LocalMeasures {
            p_c: predictability(&rc)?,
            c_c: l1_coherence(&rc)?,
            p_cp: predictability(&rcp)?,
            c_cp: l1_coherence(&rcp)?,
        };
        Ok((local, HemisphereSign::of(&bloch_of(&rc)?, &bloch_of(&rcp)?)))
    }

    fn check(&self) -> Result<()> {
        for (p, c) in [(self.p_c, self.c_c), (self.p_cp, self.c_cp)] {
            let s = p * p + c * c;
            if s.is_nan() || s > 1.0 + PC_TOL || p < 0.0 || c < 0.0 {
                return Err(Error::OutOfRange(s));
            }
        }
        Ok(())
    }

    /// `1 ± s·P_C P_C′ ± C_C C_C′` per outcome, i.e. `4·Pr(o)` on aligned inputs.
    fn denominators(&self, sign: HemisphereSign) -> [f64; 4] {
        let pp = sign.value() * self.p_c * self.p_cp;
        let cc = self.c_c * self.c_cp;
        [1.0 + pp + cc, 1.0 + pp - cc, 1.0 - pp + cc, 1.0 - pp - cc]
    }
}

/// Analytic per-outcome concurrences.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPrediction {
    /// Indexed like [`BellOutcome::ALL`]; `None` where the denominator vanishes.
    pub predicted: [Option<f64>; 4],
    pub hemisphere_sign: HemisphereSign,
    pub aligned: bool,
}

impl AnalyticPrediction {
    pub fn get(&self, outcome: BellOutcome) -> Option<f64> {
        self.predicted[outcome.index()]
    }
}

/// Outcome probabilities `Pr(o) = (1 ± s·P_C P_C′ ± C_C C_C′)/4` implied by
/// the local measures of phase-aligned inputs.
pub fn analytic_probabilities(local: &LocalMeasures, sign: HemisphereSign) -> Result<[f64; 4]> {
    local.check()?;
    Ok(local.denominators(sign).map(|d| d / 4.0))
}

/// Branch concurrences predicted from `(P_C, C_C, P_C′, C_C′)` and the
/// hemisphere sign.
///
/// With `N = √((1 − P_C² − C_C²)(1 − P_C′² − C_C′²))`:
/// `E(Φ±) = N / (1 + s P_C P_C′ ± C_C C_C′)` and
/// `E(Ψ±) = N / (1 − s P_C P_C′ ± C_C C_C′)`.
pub fn analytic_concurrences(local: &LocalMeasures, sign: HemisphereSign) -> Result<AnalyticPrediction> {
    local.check()?;
    let ent = |p: f64, c: f64| (1.0 - p * p - c * c).max(0.0);
    let numerator = (ent(local.p_c, local.c_c) * ent(local.p_cp, local.c_cp)).sqrt();
    let predicted = local
        .denominators(sign)
        .map(|d| if d > 1e-14 { Some((numerator / d).clamp(0.0, 1.0)) } else { None });
    Ok(AnalyticPrediction { predicted, hemisphere_sign: sign, aligned: false })
}

/// Analytic prediction checked against the literal decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub aligned: AlignedPair,
    pub local: LocalMeasures,
    pub prediction: AnalyticPrediction,
    /// Literal decomposition of the aligned inputs.
    pub oracle: SwapResult,
    /// `|predicted − oracle|` where both exist.
    pub deviations: [Option<f64>; 4],
    pub max_deviation: f64,
    /// Largest `|4Pr_oracle − (1 ± s P P′ ± C C′)|` over outcomes.
    pub probability_rewrite_deviation: f64,
}

pub fn predict_and_verify(xi: &PureState, eta: &PureState) -> Result<VerificationReport> {
    let aligned = align_phases(xi, eta)?;
    let (local, sign) = LocalMeasures::of(&aligned.xi, &aligned.eta)?;
    let mut prediction = analytic_concurrences(&local, sign)?;
    prediction.aligned = true;
    let oracle = decompose(&aligned.xi, &aligned.eta)?;

    let mut deviations = [None; 4];
    for o in BellOutcome::ALL {
        if let (Some(p), Some(e)) = (prediction.get(o), oracle.concurrence(o)) {
            deviations[o.index()] = Some((p - e).abs());
        }
    }
    let max_deviation = deviations.iter().flatten().copied().fold(0.0, f64::max);
    let expected = local.denominators(sign);
    let probability_rewrite_deviation = BellOutcome::ALL
        .iter()
        .map(|&o| (4.0 * oracle.probability(o) - expected[o.index()]).abs())
        .fold(0.0, f64::max);

    Ok(VerificationReport {
        aligned,
        local,
        prediction,
        oracle,
        deviations,
        max_deviation,
        probability_rewrite_deviation,
    })
}

/// Which qubit of a pair plays the measured role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasuredSide {
    /// `|ξ⟩_AC`: the measured qubit `C` is qubit 1.
    Second,
    /// `|η⟩_C'B`: the measured qubit `C′` is qubit 0.
    First,
}

/// A pure pair whose measured qubit has the given Bloch vector (a
/// purification through the partner qubit).
pub fn pair_with_marginal(bloch: &BlochVector, side: MeasuredSide) -> Result<PureState> {
    let r = bloch.radius();
    if r > 1.0 + PC_TOL {
        return Err(Error::OutOfRange(r * r));
    }
    let r = r.min(1.0);
    // Eigenvectors of ρ = ½(I + r·σ): |n±⟩ with weights (1 ± r)/2.
    let (theta, phi) = (bloch.theta(), bloch.phi());
    let up = [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)];
    let down = [C64::from_polar((theta / 2.0).sin(), -phi) * -1.0, C64::new((theta / 2.0).cos(), 0.0)];
    // down is orthogonal to up up to a phase, which is irrelevant here.
    let (w_up, w_down) = (((1.0 + r) / 2.0).sqrt(), ((1.0 - r) / 2.0).sqrt());
    let mut amps = vec![C64::new(0.0, 0.0); 4];
    for m in 0..2 {
        // partner |0⟩ ↔ up, partner |1⟩ ↔ down
        let (partner0, partner1) = (w_up * up[m], w_down * down[m]);
        match side {
            MeasuredSide::Second => {
                amps[m] = partner0;
                amps[2 | m] = partner1;
            }
            MeasuredSide::First => {
                amps[m << 1] = partner0;
                amps[(m << 1) | 1] = partner1;
            }
        }
    }
    PureState::new(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::measure_triple;
    use crate::qstate::haar_random_pure;
    use approx::assert_abs_diff_eq;

    fn diagonal_pair(p: f64) -> PureState {
        PureState::from_real(&[p.sqrt(), 0.0, 0.0, (1.0 - p).sqrt()]).unwrap()
    }

    /// `√p|++⟩ + √(1−p)|−−⟩`.
    fn hadamard_pair(p: f64) -> PureState {
        let (a, b) = (p.sqrt() * 0.5, (1.0 - p).sqrt() * 0.5);
        PureState::from_real(&[a + b, a - b, a - b, a + b]).unwrap()
    }

    fn local(p_c: f64, c_c: f64, p_cp: f64, c_cp: f64) -> LocalMeasures {
        LocalMeasures { p_c, c_c, p_cp, c_cp }
    }

    #[test]
    fn bell_readout_mapping_round_trips() {
        for o in BellOutcome::ALL {
            let (c, cp) = o.readout_bits();
            assert_eq!(BellOutcome::from_readout_bits(c, cp), o);
        }
    }

    #[test]
    fn maximally_entangled_inputs_swap_perfectly() {
        let bell = BellOutcome::PhiPlus.state();
        let r = decompose(&bell, &bell).unwrap();
        for o in BellOutcome::ALL {
            assert_abs_diff_eq!(r.probability(o), 0.25, epsilon = 1e-15);
            assert_abs_diff_eq!(r.concurrence(o).unwrap(), 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(r.averaged_concurrence, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_preparations_match_frozen_values() {
        // Frozen from an independent numpy projection onto Bell states.
        let r = decompose(&diagonal_pair(0.8), &diagonal_pair(0.3)).unwrap();
        for (o, pr, e) in [
            (BellOutcome::PhiPlus, 0.19, 0.9647527778854402),
            (BellOutcome::PhiMinus, 0.19, 0.9647527778854402),
            (BellOutcome::PsiPlus, 0.31, 0.5913000896717212),
            (BellOutcome::PsiMinus, 0.31, 0.5913000896717212),
        ] {
            assert_abs_diff_eq!(r.probability(o), pr, epsilon = 1e-14);
            assert_abs_diff_eq!(r.concurrence(o).unwrap(), e, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(r.averaged_concurrence, 0.7332121111929343, epsilon = 1e-13);
        assert_abs_diff_eq!(
            averaged_entanglement(&diagonal_pair(0.8), &diagonal_pair(0.3)).unwrap(),
            0.7332121111929343,
            epsilon = 1e-13
        );
    }

    #[test]
    fn product_input_distributes_nothing() {
        let product = tensor(&haar_random_pure(1, 5), &haar_random_pure(1, 6));
        let eta = haar_random_pure(2, 7);
        assert!(averaged_entanglement(&product, &eta).unwrap() < 1e-15);
        assert!(decompose(&product, &eta).unwrap().averaged_concurrence < 1e-14);
    }

    #[test]
    fn low_probability_branches_are_absent() {
        let zero = PureState::basis(2, 0).unwrap();
        let r = decompose(&zero, &zero).unwrap();
        assert_eq!(r.probability(BellOutcome::PsiPlus), 0.0);
        assert!(r.branch(BellOutcome::PsiPlus).post_state.is_none());
        assert!(r.concurrence(BellOutcome::PsiMinus).is_none());
        assert_abs_diff_eq!(r.probability(BellOutcome::PhiPlus), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn decompose_rejects_wrong_sizes() {
        let one = PureState::basis(1, 0).unwrap();
        let two = PureState::basis(2, 0).unwrap();
        assert!(matches!(decompose(&one, &two), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn align_is_identity_on_real_inputs() {
        let a = align_phases(&diagonal_pair(0.3), &hadamard_pair(0.8)).unwrap();
        assert_eq!(a.phi_c, 0.0);
        assert_eq!(a.phi_cp, 0.0);
        assert!(a.xi.max_abs_diff(&diagonal_pair(0.3)) < 1e-15);
        assert!(a.eta.max_abs_diff(&hadamard_pair(0.8)) < 1e-15);
    }

    #[test]
    fn align_makes_imaginary_coherence_real() {
        // (|0⟩_A|+i⟩_C·√a + |1⟩_A|0⟩_C·√b): C marginal has an imaginary off-diagonal.
        let h = FRAC_1_SQRT_2;
        let k = 0.6f64;
        let (a, b) = (k.sqrt(), (1.0 - k).sqrt());
        let xi = PureState::new(vec![C64::new(a * h, 0.0), C64::new(0.0, a * h), C64::new(b, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let before = partial_trace(&xi, &[1]).unwrap().entry(0, 1);
        assert_abs_diff_eq!(before.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(before.im, -k / 2.0, epsilon = 1e-15);

        let aligned = align_phases(&xi, &BellOutcome::PhiPlus.state()).unwrap();
        let after = partial_trace(&aligned.xi, &[1]).unwrap().entry(0, 1);
        assert_abs_diff_eq!(after.re, k / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(after.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn align_preserves_local_measures_and_entanglement() {
        for seed in 0..200 {
            let (xi, eta) = (haar_random_pure(2, 2 * seed), haar_random_pure(2, 2 * seed + 1));
            let a = align_phases(&xi, &eta).unwrap();
            let (t0, t1) = (measure_triple(&xi, 1).unwrap(), measure_triple(&a.xi, 1).unwrap());
            assert_abs_diff_eq!(t0.predictability, t1.predictability, epsilon = 1e-12);
            assert_abs_diff_eq!(t0.coherence, t1.coherence, epsilon = 1e-12);
            assert_abs_diff_eq!(t0.entanglement, t1.entanglement, epsilon = 1e-12);
            let (u0, u1) = (measure_triple(&eta, 0).unwrap(), measure_triple(&a.eta, 0).unwrap());
            assert_abs_diff_eq!(u0.predictability, u1.predictability, epsilon = 1e-12);
            assert_abs_diff_eq!(u0.coherence, u1.coherence, epsilon = 1e-12);
            assert_abs_diff_eq!(u0.entanglement, u1.entanglement, epsilon = 1e-12);
        }
    }

    #[test]
    fn analytic_maximally_entangled() {
        for s in [HemisphereSign::Same, HemisphereSign::Boundary, HemisphereSign::Opposite] {
            let p = analytic_concurrences(&local(0.0, 0.0, 0.0, 0.0), s).unwrap();
            assert!(p.predicted.iter().all(|e| *e == Some(1.0)));
        }
    }

    #[test]
    fn analytic_equal_coherence_without_predictability() {
        let c = 0.7;
        let p = analytic_concurrences(&local(0.0, c, 0.0, c), HemisphereSign::Boundary).unwrap();
        let partial = (1.0 - c * c) / (1.0 + c * c);
        assert_abs_diff_eq!(p.get(BellOutcome::PhiPlus).unwrap(), partial, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(BellOutcome::PsiPlus).unwrap(), partial, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(BellOutcome::PhiMinus).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(BellOutcome::PsiMinus).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn analytic_equal_predictability_without_coherence() {
        let p = analytic_concurrences(&local(0.6, 0.0, 0.6, 0.0), HemisphereSign::Same).unwrap();
        assert_abs_diff_eq!(p.get(BellOutcome::PhiPlus).unwrap(), 0.64 / 1.36, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(BellOutcome::PhiMinus).unwrap(), 0.47058823529411764, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(BellOutcome::PsiPlus).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(BellOutcome::PsiMinus).unwrap(), 1.0, epsilon = 1e-15);

        let p = analytic_concurrences(&local(0.6, 0.0, 0.6, 0.0), HemisphereSign::Opposite).unwrap();
        assert_abs_diff_eq!(p.get(BellOutcome::PhiPlus).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(BellOutcome::PsiMinus).unwrap(), 0.64 / 1.36, epsilon = 1e-15);
    }

    #[test]
    fn analytic_rejects_unphysical_pairs() {
        assert!(matches!(
            analytic_concurrences(&local(0.8, 0.7, 0.0, 0.0), HemisphereSign::Same),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn analytic_vanishing_denominator_is_absent() {
        // P_C = P_C′ = 1 in the same hemisphere: Ψ± can never occur.
        let p = analytic_concurrences(&local(1.0, 0.0, 1.0, 0.0), HemisphereSign::Same).unwrap();
        assert_eq!(p.get(BellOutcome::PsiPlus), None);
        assert_eq!(p.get(BellOutcome::PhiPlus), Some(0.0));
    }

    #[test]
    fn prediction_matches_oracle_on_haar_pairs() {
        for seed in 0..300 {
            let r = predict_and_verify(&haar_random_pure(2, 2 * seed), &haar_random_pure(2, 2 * seed + 1)).unwrap();
            assert!(r.max_deviation <= 1e-10, "seed {seed}: {}", r.max_deviation);
            assert!(r.probability_rewrite_deviation <= 1e-10);
            assert!(r.prediction.aligned);
        }
    }

    #[test]
    fn hadamard_family_labels_depend_on_frame() {
        let q = 0.25;
        let (xi, eta) = (hadamard_pair(1.0 - q), hadamard_pair(q));
        let partial = 2.0 * q * (1.0 - q) / (q * q + (1.0 - q) * (1.0 - q));
        assert_abs_diff_eq!(partial, 0.6, epsilon = 1e-15);

        // Lab frame: Φ+ and Ψ+ are the maximally entangled branches.
        let lab = decompose(&xi, &eta).unwrap();
        assert_abs_diff_eq!(lab.concurrence(BellOutcome::PhiPlus).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lab.concurrence(BellOutcome::PsiPlus).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lab.concurrence(BellOutcome::PhiMinus).unwrap(), partial, epsilon = 1e-12);
        assert_abs_diff_eq!(lab.concurrence(BellOutcome::PsiMinus).unwrap(), partial, epsilon = 1e-12);
        let c_c = measure_triple(&xi, 1).unwrap().coherence;
        let identity = 1.0 - 2.0 * (lab.probability(BellOutcome::PhiPlus) + lab.probability(BellOutcome::PsiPlus));
        assert_abs_diff_eq!(identity, c_c * c_c, epsilon = 1e-12);

        // Aligned frame: the C′ coherence flips sign, so the roles of ± swap.
        let r = predict_and_verify(&xi, &eta).unwrap();
        assert!(r.max_deviation < 1e-12);
        assert_abs_diff_eq!(r.aligned.phi_cp, std::f64::consts::PI, epsilon = 1e-15);
        assert_abs_diff_eq!(r.prediction.get(BellOutcome::PhiMinus).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.prediction.get(BellOutcome::PsiMinus).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.prediction.get(BellOutcome::PhiPlus).unwrap(), partial, epsilon = 1e-12);
    }

    #[test]
    fn pair_with_marginal_reproduces_bloch_vector() {
        for (x, y, z) in [(0.3, 0.2, -0.5), (0.0, 0.0, 0.7), (0.0, 0.0, -0.2), (0.6, 0.0, 0.0), (0.0, 0.0, 0.0)] {
            let v = BlochVector { x, y, z };
            for (side, qubit) in [(MeasuredSide::Second, 1), (MeasuredSide::First, 0)] {
                let s = pair_with_marginal(&v, side).unwrap();
                let b = bloch_of(&partial_trace(&s, &[qubit]).unwrap()).unwrap();
                assert_abs_diff_eq!(b.x, x, epsilon = 1e-14);
                assert_abs_diff_eq!(b.y, y, epsilon = 1e-14);
                assert_abs_diff_eq!(b.z, z, epsilon = 1e-14);
            }
        }
    }
}
