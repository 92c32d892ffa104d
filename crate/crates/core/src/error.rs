use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state has (near) zero norm: squared norm {0:e}")]
    ZeroNorm(f64),

    #[error("squared norm {0} is outside the renormalization band around 1")]
    NotNormalizable(f64),

    #[error("amplitude or matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected} qubit(s), found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit subset {keep:?} is not a nonempty strict subset of 0..{qubits}")]
    BadSubset { keep: Vec<usize>, qubits: usize },

    #[error("qubit index {index} out of range for {qubits} qubit(s)")]
    BadIndex { index: usize, qubits: usize },

    #[error("matrix is not a valid density matrix: {0}")]
    InvalidDensity(String),

    #[error("density matrix has eigenvalue {0:e} below the positivity floor")]
    NotPositive(f64),

    #[error("predictability/coherence pair out of range: P^2 + C^2 = {0}")]
    OutOfRange(f64),

    #[error("invalid readout noise: {0}")]
    InvalidNoise(String),

    #[error("bad measurement basis {0:?}: expected characters from {{X, Y, Z, I}}")]
    BadBasis(String),

    #[error("shot count must be at least 1")]
    NoShots,

    #[error("calibration matrix is numerically singular (condition number {0:e})")]
    Singular(f64),

    #[error("tomography input is missing the {0:?} setting")]
    MissingBasis(String),

    #[error("unknown verification suite {0:?}")]
    UnknownSuite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
