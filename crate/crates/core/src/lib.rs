//! Entanglement swapping from partially entangled two-qubit pure states.
//!
//! * [`qstate`]: dense pure states, density matrices, partial trace, Bloch vectors.
//! * [`measures`]: predictability, l1-coherence, concurrence, complementarity residual.
//! * [`swap`]: Bell-basis decomposition and the analytic branch-concurrence predictors.
//! * [`shots`]: readout noise, sampling, calibration/mitigation, Pauli tomography, Bell measurement with post-selection.
//! * [`cli`]: sweep configuration, figure-data generation, verification suites and the `eswap` command line.

pub mod cli;
pub mod error;
pub mod measures;
pub mod qstate;
pub mod shots;
pub mod swap;

pub use error::{Error, Result};
