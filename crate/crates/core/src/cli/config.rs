//! Sweep configuration: a sectioned `key = value` file plus flag overrides.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::shots::{ReadoutNoise, DEFAULT_EPS01, DEFAULT_EPS10, DEFAULT_SHOTS};

/// Shot-mode sweeps never go closer to the endpoints than this.
pub const Q_CLAMP_LOW: f64 = 0.03;
pub const Q_CLAMP_HIGH: f64 = 0.97;
pub const DEFAULT_Q_STEPS: usize = 21;
pub const DEFAULT_SEED: u64 = 2023;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Theory,
    IdealSim,
    NoisySim,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Theory, Mode::IdealSim, Mode::NoisySim];

    pub fn tag(self) -> &'static str {
        match self {
            Mode::Theory => "theory",
            Mode::IdealSim => "ideal_sim",
            Mode::NoisySim => "noisy_sim",
        }
    }

    pub fn uses_shots(self) -> bool {
        !matches!(self, Mode::Theory)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "theory" => Ok(Mode::Theory),
            "ideal_sim" | "ideal" => Ok(Mode::IdealSim),
            "noisy_sim" | "noisy" => Ok(Mode::NoisySim),
            other => Err(Error::Config(format!("mode: unknown value {other:?} (theory | ideal_sim | noisy_sim)"))),
        }
    }
}

/// How each pair is prepared from its parameter `t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preparation {
    /// `√t|00⟩ + √(1−t)|11⟩`: predictability only.
    Computational,
    /// `√t|++⟩ + √(1−t)|−−⟩`: coherence only.
    Hadamard,
}

impl FromStr for Preparation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "computational" => Ok(Preparation::Computational),
            "hadamard" => Ok(Preparation::Hadamard),
            other => Err(Error::Config(format!("preparation: unknown value {other:?} (computational | hadamard)"))),
        }
    }
}

impl fmt::Display for Preparation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preparation::Computational => "computational",
            Preparation::Hadamard => "hadamard",
        })
    }
}

/// Parameter `p` of the `AC` pair as a function of the sweep variable `q`
/// (which always parameterizes the `C′B` pair).
#[derive(Debug, Clone, PartialEq)]
pub enum PRule {
    OneMinusQ,
    EqualQ,
    /// One `p` per sweep point.
    Explicit(Vec<f64>),
}

impl PRule {
    pub fn p_for(&self, index: usize, q: f64) -> f64 {
        match self {
            PRule::OneMinusQ => 1.0 - q,
            PRule::EqualQ => q,
            PRule::Explicit(ps) => ps[index],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub q_values: Vec<f64>,
    pub preparation: Preparation,
    pub p_rule: PRule,
    pub shots: u64,
    pub eps01: f64,
    pub eps10: f64,
    pub seed: u64,
    pub modes: Vec<Mode>,
    /// Apply calibration-matrix mitigation in `noisy_sim`.
    pub mitigation: bool,
    pub calibration_shots: u64,
    /// Blocks used for jackknife error bars.
    pub jackknife_blocks: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            q_values: even_grid(0.0, 1.0, DEFAULT_Q_STEPS),
            preparation: Preparation::Hadamard,
            p_rule: PRule::OneMinusQ,
            shots: DEFAULT_SHOTS,
            eps01: DEFAULT_EPS01,
            eps10: DEFAULT_EPS10,
            seed: DEFAULT_SEED,
            modes: vec![Mode::Theory, Mode::IdealSim, Mode::NoisySim],
            mitigation: true,
            calibration_shots: DEFAULT_SHOTS,
            jackknife_blocks: 8,
        }
    }
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn even_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect(),
    }
}

impl SweepConfig {
    pub fn uses_shots(&self) -> bool {
        self.modes.iter().any(|m| m.uses_shots())
    }

    /// Sweep points actually evaluated: clamped to `[0.03, 0.97]` when any
    /// shot-based mode is active.
    pub fn effective_q_values(&self) -> Vec<f64> {
        if self.uses_shots() {
            self.q_values.iter().map(|q| q.clamp(Q_CLAMP_LOW, Q_CLAMP_HIGH)).collect()
        } else {
            self.q_values.clone()
        }
    }

    pub fn noise(&self, qubits: usize) -> Result<ReadoutNoise> {
        ReadoutNoise::uniform(qubits, self.eps01, self.eps10)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_values.is_empty() {
            return Err(Error::Config("q_values: sweep is empty".into()));
        }
        if let Some(q) = self.q_values.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::Config(format!("q_values: {q} is outside [0, 1]")));
        }
        if let PRule::Explicit(ps) = &self.p_rule {
            if ps.len() != self.q_values.len() {
                return Err(Error::Config(format!(
                    "p_values: {} values for {} sweep points",
                    ps.len(),
                    self.q_values.len()
                )));
            }
            if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::Config(format!("p_values: {p} is outside [0, 1]")));
            }
        }
        if self.modes.is_empty() {
            return Err(Error::Config("modes: no mode selected".into()));
        }
        if self.uses_shots() && (self.shots == 0 || self.calibration_shots == 0) {
            return Err(Error::Config("shots: must be at least 1".into()));
        }
        if self.jackknife_blocks < 2 {
            return Err(Error::Config("jackknife_blocks: need at least 2".into()));
        }
        self.noise(1).map_err(|e| Error::Config(format!("noise: {e}")))?;
        Ok(())
    }

    /// Parses a config file; unknown keys and malformed values are errors
    /// with line/column information.
    pub fn from_config_str(text: &str) -> Result<Self> {
        Self::from_config_str_with_base(text, SweepConfig::default())
    }

    /// Like [`SweepConfig::from_config_str`], with keys absent from the file
    /// taken from `base`.
    pub fn from_config_str_with_base(text: &str, base: SweepConfig) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = base;
        let s = file.sweep;
        if let Some(values) = s.q_values {
            cfg.q_values = values;
        } else if s.q_min.is_some() || s.q_max.is_some() || s.q_steps.is_some() {
            cfg.q_values = even_grid(s.q_min.unwrap_or(0.0), s.q_max.unwrap_or(1.0), s.q_steps.unwrap_or(DEFAULT_Q_STEPS));
        }
        if let Some(p) = s.preparation {
            cfg.preparation = p.parse()?;
        }
        match (s.p_rule.as_deref(), s.p_values) {
            (Some("list"), Some(ps)) | (None, Some(ps)) => cfg.p_rule = PRule::Explicit(ps),
            (Some("list"), None) => return Err(Error::Config("sweep.p_values: required when p_rule = \"list\"".into())),
            (Some("one_minus_q"), None) => cfg.p_rule = PRule::OneMinusQ,
            (Some("equal_q"), None) => cfg.p_rule = PRule::EqualQ,
            (Some(other), _) => {
                return Err(Error::Config(format!(
                    "sweep.p_rule: unknown value {other:?} (one_minus_q | equal_q | list), or p_values given with a non-list rule"
                )))
            }
            (None, None) => {}
        }
        let smp = file.sampling;
        if let Some(v) = smp.shots {
            cfg.shots = v;
        }
        if let Some(v) = smp.seed {
            cfg.seed = v;
        }
        if let Some(modes) = smp.modes {
            cfg.modes = modes.iter().map(|m| m.parse()).collect::<Result<_>>()?;
        }
        if let Some(v) = smp.jackknife_blocks {
            cfg.jackknife_blocks = v;
        }
        let n = file.noise;
        if let Some(v) = n.eps01 {
            cfg.eps01 = v;
        }
        if let Some(v) = n.eps10 {
            cfg.eps10 = v;
        }
        if let Some(v) = n.mitigation {
            cfg.mitigation = v;
        }
        if let Some(v) = n.calibration_shots {
            cfg.calibration_shots = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    sampling: SamplingSection,
    #[serde(default)]
    noise: NoiseSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    q_min: Option<f64>,
    q_max: Option<f64>,
    q_steps: Option<usize>,
    q_values: Option<Vec<f64>>,
    preparation: Option<String>,
    p_rule: Option<String>,
    p_values: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplingSection {
    shots: Option<u64>,
    seed: Option<u64>,
    modes: Option<Vec<String>>,
    jackknife_blocks: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSection {
    eps01: Option<f64>,
    eps10: Option<f64>,
    mitigation: Option<bool>,
    calibration_shots: Option<u64>,
}

/// Commented template with every key at its default.
pub fn config_template() -> String {
    let d = SweepConfig::default();
    format!(
        r#"# eswap sweep configuration

[sweep]
# Evenly spaced grid; shot-based modes clamp the endpoints to {lo} and {hi}.
q_min = 0.0
q_max = 1.0
q_steps = {steps}
# q_values = [0.1, 0.25, 0.5]   # explicit grid, overrides q_min/q_max/q_steps
preparation = "{prep}"          # hadamard | computational
p_rule = "one_minus_q"          # one_minus_q | equal_q | list
# p_values = [0.9, 0.75, 0.5]   # with p_rule = "list", one per sweep point

[sampling]
shots = {shots}                 # per measurement setting
seed = {seed}
modes = ["theory", "ideal_sim", "noisy_sim"]
jackknife_blocks = {blocks}

[noise]
eps01 = {eps01}                 # P(read 1 | true 0), per qubit
eps10 = {eps10}                 # P(read 0 | true 1), per qubit
mitigation = {mitigation}
calibration_shots = {cal}
"#,
        lo = Q_CLAMP_LOW,
        hi = Q_CLAMP_HIGH,
        steps = DEFAULT_Q_STEPS,
        prep = d.preparation,
        shots = d.shots,
        seed = d.seed,
        blocks = d.jackknife_blocks,
        eps01 = d.eps01,
        eps10 = d.eps10,
        mitigation = d.mitigation,
        cal = d.calibration_shots,
    )
}
