//! Figure data: local measures before the Bell measurement (`fig1`) and
//! post-selected branch entanglement after it (`fig2`), in theory and in
//! finite-shot emulation.

use rayon::prelude::*;

use super::config::{Mode, PRule, Preparation, SweepConfig};
use crate::error::{Error, Result};
use crate::measures::{concurrence_mixed, l1_coherence, measure_triple, predictability};
use crate::qstate::{partial_trace, tensor, PureState};
use crate::shots::{
    bell_measure_and_postselect, build_calibration, derive_seed, pauli_settings, CalibrationMatrix, ConditionalCounts,
    CountsTable, PauliData, ReadoutNoise, ShotBudget, QUBIT_A, QUBIT_B, QUBIT_C, QUBIT_CP,
};
use crate::swap::{decompose, BellOutcome};

pub const C_C: &str = "C_C";
pub const P_C: &str = "P_C";
pub const E_AC: &str = "E_AC";
pub const PROB_IDENTITY: &str = "prob_identity";
pub const C_C_SQ: &str = "C_C_sq";

/// Post-selected groups smaller than this are flagged and left out of figure data.
pub const LOW_STATISTICS_SHOTS: u64 = 50;
pub const FLAG_LOW_STATISTICS: &str = "low_statistics";
pub const FLAG_ABSENT: &str = "absent";

/// Quantity name of a branch concurrence, e.g. `E_phi_plus`.
pub fn branch_quantity(outcome: BellOutcome) -> &'static str {
    match outcome {
        BellOutcome::PhiPlus => "E_phi_plus",
        BellOutcome::PhiMinus => "E_phi_minus",
        BellOutcome::PsiPlus => "E_psi_plus",
        BellOutcome::PsiMinus => "E_psi_minus",
    }
}

/// One `(q, quantity, mode)` record.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub q: f64,
    pub quantity: String,
    pub mode: Mode,
    pub value: f64,
    pub stderr: Option<f64>,
    pub flags: Vec<String>,
}

impl FigureRow {
    fn theory(q: f64, quantity: &str, value: f64) -> Self {
        Self { q, quantity: quantity.to_string(), mode: Mode::Theory, value, stderr: None, flags: Vec::new() }
    }

    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FigureTable {
    pub rows: Vec<FigureRow>,
}

impl FigureTable {
    pub fn new(mut rows: Vec<FigureRow>) -> Self {
        rows.sort_by(|a, b| {
            a.q.total_cmp(&b.q)
                .then_with(|| a.quantity.cmp(&b.quantity))
                .then_with(|| a.mode.cmp(&b.mode))
        });
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, q: f64, quantity: &str, mode: Mode) -> Option<&FigureRow> {
        self.rows.iter().find(|r| (r.q - q).abs() < 1e-12 && r.quantity == quantity && r.mode == mode)
    }

    pub fn select<'a>(&'a self, quantity: &'a str, mode: Mode) -> impl Iterator<Item = &'a FigureRow> + 'a {
        self.rows.iter().filter(move |r| r.quantity == quantity && r.mode == mode)
    }
}

/// The pair prepared from parameter `t`: `√t|00⟩ + √(1−t)|11⟩` or
/// `√t|++⟩ + √(1−t)|−−⟩`.
pub fn prepare_pair(preparation: Preparation, t: f64) -> Result<PureState> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Config(format!("pair parameter {t} outside [0, 1]")));
    }
    let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
    match preparation {
        Preparation::Computational => PureState::from_real(&[a, 0.0, 0.0, b]),
        Preparation::Hadamard => {
            let (a, b) = (a / 2.0, b / 2.0);
            PureState::from_real(&[a + b, a - b, a - b, a + b])
        }
    }
}

/// Closed-form `fig1` values `(C_C, P_C, E_AC)` for an `AC` pair with parameter `p`.
pub fn fig1_theory(preparation: Preparation, p: f64) -> (f64, f64, f64) {
    let local = (2.0 * p - 1.0).abs();
    let ent = 2.0 * (p * (1.0 - p)).max(0.0).sqrt();
    match preparation {
        Preparation::Hadamard => (local, 0.0, ent),
        Preparation::Computational => (0.0, local, ent),
    }
}

/// Closed forms for the Hadamard family with `p = 1 − q`: the `Φ+`/`Ψ+`
/// branches are maximally entangled, `Φ−`/`Ψ−` carry
/// `2q(1−q)/(q² + (1−q)²)`, and `1 − 2(Pr(Φ+) + Pr(Ψ+)) = (2q − 1)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig2ClosedForm {
    pub maximal: f64,
    pub partial: f64,
    pub prob_identity: f64,
}

pub fn fig2_closed_form(q: f64) -> Fig2ClosedForm {
    Fig2ClosedForm {
        maximal: 1.0,
        partial: 2.0 * q * (1.0 - q) / (q * q + (1.0 - q) * (1.0 - q)),
        prob_identity: (2.0 * q - 1.0).powi(2),
    }
}

/// Value and jackknife standard error of each estimated quantity.
struct Estimates {
    values: Vec<f64>,
    stderrs: Vec<f64>,
}

/// Delete-one-block jackknife. `estimate(None)` uses every block,
/// `estimate(Some(b))` leaves block `b` out.
fn jackknife(blocks: usize, estimate: impl Fn(Option<usize>) -> Result<Vec<f64>>) -> Result<Estimates> {
    let values = estimate(None)?;
    let leave_out: Vec<Vec<f64>> = (0..blocks).map(|b| estimate(Some(b))).collect::<Result<_>>()?;
    let k = blocks as f64;
    let stderrs = (0..values.len())
        .map(|i| {
            let column: Vec<f64> = leave_out.iter().map(|v| v[i]).filter(|x| x.is_finite()).collect();
            if column.len() < 2 {
                return f64::NAN;
            }
            let mean = column.iter().sum::<f64>() / column.len() as f64;
            ((k - 1.0) / k * column.iter().map(|x| (x - mean).powi(2)).sum::<f64>()).sqrt()
        })
        .collect();
    Ok(Estimates { values, stderrs })
}

fn merge_blocks(blocks: &[CountsTable], skip: Option<usize>) -> CountsTable {
    CountsTable::merged(blocks.iter().enumerate().filter(|(b, _)| Some(*b) != skip).map(|(_, t)| t))
        .expect("at least two blocks")
}

fn tomography_data(tables: &[CountsTable], cal: Option<&CalibrationMatrix>) -> Result<PauliData> {
    match cal {
        Some(cal) => PauliData::from_counts_mitigated(tables, cal),
        None => PauliData::from_counts(tables),
    }
}

fn sim_mode_noise(cfg: &SweepConfig, mode: Mode, qubits: usize) -> Result<ReadoutNoise> {
    match mode {
        Mode::NoisySim => cfg.noise(qubits),
        _ => Ok(ReadoutNoise::noiseless(qubits)),
    }
}

fn mode_stream(mode: Mode) -> u64 {
    mode as u64
}

fn fig1_point(cfg: &SweepConfig, index: usize, q: f64) -> Result<Vec<FigureRow>> {
    let p = cfg.p_rule.p_for(index, q);
    let xi = prepare_pair(cfg.preparation, p)?;
    let mut rows = Vec::new();
    for &mode in &cfg.modes {
        if mode == Mode::Theory {
            let (c, pr, e) = fig1_theory(cfg.preparation, p);
            rows.extend([FigureRow::theory(q, C_C, c), FigureRow::theory(q, P_C, pr), FigureRow::theory(q, E_AC, e)]);
            continue;
        }
        let seed = derive_seed(derive_seed(cfg.seed, index as u64), mode_stream(mode));
        let noise = sim_mode_noise(cfg, mode, 2)?;
        let cal = if mode == Mode::NoisySim && cfg.mitigation {
            Some(build_calibration(&noise, 2, ShotBudget::Finite(cfg.calibration_shots), derive_seed(seed, 1000))?)
        } else {
            None
        };
        let blocks: Vec<Vec<CountsTable>> = pauli_settings(2)
            .iter()
            .enumerate()
            .map(|(k, s)| crate::shots::sample_measurement_blocks(&xi, s, cfg.shots, &noise, derive_seed(seed, k as u64), cfg.jackknife_blocks))
            .collect::<Result<_>>()?;
        let est = jackknife(cfg.jackknife_blocks, |skip| {
            let tables: Vec<CountsTable> = blocks.iter().map(|b| merge_blocks(b, skip)).collect();
            let rho = crate::shots::tomography_2q(&tomography_data(&tables, cal.as_ref())?)?;
            let rc = partial_trace(&rho, &[1])?;
            Ok(vec![l1_coherence(&rc)?, predictability(&rc)?, concurrence_mixed(&rho)?])
        })?;
        for (i, quantity) in [C_C, P_C, E_AC].into_iter().enumerate() {
            rows.push(FigureRow {
                q,
                quantity: quantity.to_string(),
                mode,
                value: est.values[i],
                stderr: Some(est.stderrs[i]),
                flags: Vec::new(),
            });
        }
    }
    Ok(rows)
}

/// `fig1`: coherence, predictability and entanglement of the `AC` pair.
pub fn run_fig1(cfg: &SweepConfig) -> Result<FigureTable> {
    cfg.validate()?;
    let qs = cfg.effective_q_values();
    let rows: Vec<Vec<FigureRow>> = qs.par_iter().enumerate().map(|(i, &q)| fig1_point(cfg, i, q)).collect::<Result<_>>()?;
    Ok(FigureTable::new(rows.into_iter().flatten().collect()))
}

fn fig2_theory_rows(cfg: &SweepConfig, xi: &PureState, eta: &PureState, q: f64) -> Result<Vec<FigureRow>> {
    let c_c = measure_triple(xi, 1)?.coherence;
    let mut rows = vec![FigureRow::theory(q, C_C_SQ, c_c * c_c)];
    if cfg.preparation == Preparation::Hadamard && cfg.p_rule == PRule::OneMinusQ {
        let cf = fig2_closed_form(q);
        for o in BellOutcome::ALL {
            let value = match o {
                BellOutcome::PhiPlus | BellOutcome::PsiPlus => cf.maximal,
                BellOutcome::PhiMinus | BellOutcome::PsiMinus => cf.partial,
            };
            rows.push(FigureRow::theory(q, branch_quantity(o), value));
        }
        rows.push(FigureRow::theory(q, PROB_IDENTITY, cf.prob_identity));
        return Ok(rows);
    }
    // Outside the closed-form family: E(o) = E(ξ)E(η)/(4 Pr(o)) via the literal decomposition.
    let swap = decompose(xi, eta)?;
    for o in BellOutcome::ALL {
        let mut row = FigureRow::theory(q, branch_quantity(o), swap.concurrence(o).unwrap_or(f64::NAN));
        if swap.concurrence(o).is_none() {
            row.flags.push(FLAG_ABSENT.into());
        }
        rows.push(row);
    }
    let identity = 1.0 - 2.0 * (swap.probability(BellOutcome::PhiPlus) + swap.probability(BellOutcome::PsiPlus));
    rows.push(FigureRow::theory(q, PROB_IDENTITY, identity));
    Ok(rows)
}

/// Index of an outcome's `(c, c′)` readout in a two-qubit distribution.
fn readout_index(o: BellOutcome) -> usize {
    let (c, cp) = o.readout_bits();
    (c << 1) | cp
}

fn fig2_sim_rows(cfg: &SweepConfig, mode: Mode, global: &PureState, index: usize, q: f64) -> Result<Vec<FigureRow>> {
    let seed = derive_seed(derive_seed(cfg.seed, index as u64), 16 + mode_stream(mode));
    let noise = sim_mode_noise(cfg, mode, 4)?;
    let (cal_ab, cal_cc) = if mode == Mode::NoisySim && cfg.mitigation {
        let budget = ShotBudget::Finite(cfg.calibration_shots);
        (
            Some(build_calibration(&noise.select(&[QUBIT_A, QUBIT_B]), 2, budget, derive_seed(seed, 1000))?),
            Some(build_calibration(&noise.select(&[QUBIT_C, QUBIT_CP]), 2, budget, derive_seed(seed, 1001))?),
        )
    } else {
        (None, None)
    };
    let sampler = bell_measure_and_postselect(global, cfg.shots, &noise, seed)?;
    let settings = pauli_settings(2);
    // runs[setting][block][outcome]
    let runs: Vec<Vec<ConditionalCounts>> = settings
        .iter()
        .map(|s| sampler.conditional_blocks(s, cfg.jackknife_blocks))
        .collect::<Result<_>>()?;

    let group_tables = |o: BellOutcome, skip: Option<usize>| -> Vec<CountsTable> {
        runs.iter()
            .map(|blocks| {
                let per_block: Vec<CountsTable> = blocks.iter().map(|b| b[o.index()].clone()).collect();
                merge_blocks(&per_block, skip)
            })
            .collect()
    };

    let mut low_stats = [false; 4];
    for o in BellOutcome::ALL {
        low_stats[o.index()] = group_tables(o, None).iter().any(|t| t.shots() < LOW_STATISTICS_SHOTS);
    }

    let est = jackknife(cfg.jackknife_blocks, |skip| {
        let mut values = Vec::with_capacity(5);
        for o in BellOutcome::ALL {
            let tables = group_tables(o, skip);
            if tables.iter().any(|t| t.shots() == 0) {
                values.push(f64::NAN);
                continue;
            }
            let rho = crate::shots::tomography_2q(&tomography_data(&tables, cal_ab.as_ref())?)?;
            values.push(concurrence_mixed(&rho)?);
        }
        let mut readout = vec![0u64; 4];
        for o in BellOutcome::ALL {
            readout[readout_index(o)] = group_tables(o, skip).iter().map(CountsTable::shots).sum();
        }
        let pooled = CountsTable::new("ZZ", 2, readout)?;
        let dist = match &cal_cc {
            Some(cal) => crate::shots::mitigate(&pooled, cal)?,
            None => pooled.frequencies(),
        };
        values.push(1.0 - 2.0 * (dist[readout_index(BellOutcome::PhiPlus)] + dist[readout_index(BellOutcome::PsiPlus)]));
        Ok(values)
    })?;

    let mut rows = Vec::with_capacity(5);
    for o in BellOutcome::ALL {
        let i = o.index();
        let mut flags = Vec::new();
        if low_stats[i] {
            flags.push(FLAG_LOW_STATISTICS.to_string());
        }
        rows.push(FigureRow {
            q,
            quantity: branch_quantity(o).to_string(),
            mode,
            value: est.values[i],
            stderr: Some(est.stderrs[i]),
            flags,
        });
    }
    rows.push(FigureRow {
        q,
        quantity: PROB_IDENTITY.to_string(),
        mode,
        value: est.values[4],
        stderr: Some(est.stderrs[4]),
        flags: Vec::new(),
    });
    Ok(rows)
}

fn fig2_point(cfg: &SweepConfig, index: usize, q: f64) -> Result<Vec<FigureRow>> {
    let p = cfg.p_rule.p_for(index, q);
    let xi = prepare_pair(cfg.preparation, p)?;
    let eta = prepare_pair(cfg.preparation, q)?;
    let mut rows = Vec::new();
    for &mode in &cfg.modes {
        if mode == Mode::Theory {
            rows.extend(fig2_theory_rows(cfg, &xi, &eta, q)?);
        } else {
            rows.extend(fig2_sim_rows(cfg, mode, &tensor(&xi, &eta), index, q)?);
        }
    }
    Ok(rows)
}

/// `fig2`: entanglement of the post-selected `AB` branches and the
/// probability identity `1 − 2(Pr(Φ+) + Pr(Ψ+))`.
pub fn run_fig2(cfg: &SweepConfig) -> Result<FigureTable> {
    cfg.validate()?;
    let qs = cfg.effective_q_values();
    let rows: Vec<Vec<FigureRow>> = qs.par_iter().enumerate().map(|(i, &q)| fig2_point(cfg, i, q)).collect::<Result<_>>()?;
    Ok(FigureTable::new(rows.into_iter().flatten().collect()))
}
