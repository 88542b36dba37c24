use thiserror::Error;

pub type Result<T> = std::result::Result<T, QgnnError>;

#[derive(Debug, Error)]
pub enum QgnnError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("no connected graph found after {attempts} attempts (n = {n}, p = {p})")]
    ConnectivityUnreachable { n: usize, p: f64, attempts: usize },

    #[error("permutation has length {got}, expected {expected}")]
    PermutationLength { expected: usize, got: usize },

    #[error("not a permutation: {0}")]
    InvalidPermutation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("term {0} is not diagonal in the computational basis")]
    NonDiagonalTerm(String),

    #[error(
        "{n_qubits} qubits exceeds the dense simulation cap of {cap}; use a structured \
         (diagonal, mixer or Trotterized) evolution instead"
    )]
    DenseCapExceeded { n_qubits: usize, cap: usize },

    #[error("register layout mismatch: {0}")]
    RegisterLayout(String),

    #[error("potential is not finite at grid value(s) {0:?}")]
    NonFinitePotential(Vec<f64>),

    #[error("malformed Pauli sum: {0}")]
    PauliParse(String),

    #[error("Hamiltonian terms do not commute: {0}")]
    NonCommuting(String),

    #[error("parameter layout mismatch: {0}")]
    ParamLayout(String),

    #[error("invalid ansatz: {0}")]
    InvalidAnsatz(String),

    #[error("objective returned a non-finite value at {0:?}")]
    NonFiniteObjective(Vec<f64>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
