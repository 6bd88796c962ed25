use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpsError {
    #[error("grid exponent n = {n} is outside the supported range [{min}, {max}]")]
    GridExponent { n: usize, min: usize, max: usize },

    #[error("index {index} is outside [{min}, {max}]")]
    IndexOutOfRange { index: u64, min: u64, max: u64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("zero right-hand side")]
    ZeroRightHandSide,

    #[error("zero amplitude vector")]
    ZeroVector,

    #[error("qubit {qubit} is out of bounds for a {num_qubits}-qubit circuit")]
    QubitOutOfBounds { qubit: usize, num_qubits: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid register layout: {0}")]
    InvalidLayout(String),

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("register {register} is not in its ground state")]
    RegisterNotGround { register: String },

    #[error("postselection impossible: outcome probability {probability:e} is below the floor")]
    PostselectionImpossible { probability: f64 },

    #[error("state does not factor over the fixed assignment (residual mass {residual:e})")]
    NotProductState { residual: f64 },

    #[error("tridiagonal solve residual {residual:e} exceeds the bound")]
    ResidualTooLarge { residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = QpsError> = std::result::Result<T, E>;
