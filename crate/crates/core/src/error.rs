use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("parameter index {index} out of range for {n_params} parameters")]
    ParamOutOfRange { index: usize, n_params: usize },

    #[error("gate control and target are both qubit {0}")]
    ControlEqualsTarget(usize),

    #[error("parametric gate is missing its angle")]
    MissingAngle,

    #[error("non-parametric gate was given an angle")]
    UnexpectedAngle,

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("qubit count {n_qubits} exceeds supported maximum {max}")]
    TooManyQubits { n_qubits: usize, max: usize },

    #[error("subset of {size} qubits exceeds maximum {max}")]
    SubsetTooLarge { size: usize, max: usize },

    #[error("infeasible graph: {0}")]
    InfeasibleGraph(String),

    #[error("graph sampling gave up after {attempts} rejected pairings")]
    PairingBudgetExceeded { attempts: usize },

    #[error("Majorana product reduced to a non-real weight (phase {phase})")]
    NonRealWeight { phase: String },

    #[error("eigensolver did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConverged { iterations: usize, residual: f64 },

    #[error("matrix is not unitary: max deviation {deviation:.3e}")]
    NonUnitary { deviation: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("checkpoint rejected: {0}")]
    CheckpointMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
