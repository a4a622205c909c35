use thiserror::Error;

/// Errors produced by the simulator and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("no calibration entry for gate kind `{kind}` on qubits {qubits:?}")]
    UnknownGateKind { kind: String, qubits: Vec<usize> },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("circuit width {width} exceeds the simulator limit of {max} qubits")]
    WidthOverflow { width: usize, max: usize },

    #[error("unsupported problem size n = {0}")]
    UnsupportedSize(usize),

    #[error("invalid bitstring `{0}`")]
    InvalidBitstring(String),

    #[error("sequence {name} has {pulses} pulses; at most {max} are allowed")]
    TooManyPulses { name: String, pulses: usize, max: usize },

    #[error("unknown pulse sequence `{0}`")]
    UnknownSequence(String),

    #[error("invalid fidelity: {0}")]
    InvalidFidelity(String),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}
