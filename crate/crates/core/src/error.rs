use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("bit string must be nonempty")]
    EmptyBits,
    #[error("invalid character {0:?} in bit string")]
    InvalidBit(char),
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),
    #[error("basis measures {expected} qubit(s) but {got} were given")]
    ArityMismatch { expected: usize, got: usize },
    #[error("amplitude vector has length {got}, expected a power of two >= 2")]
    BadLength { got: usize },
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("states have different sizes ({0} vs {1} qubits)")]
    SizeMismatch(usize, usize),
    #[error("too many qubits ({0}); the engine supports at most {max}", max = crate::state::MAX_QUBITS)]
    TooManyQubits(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("{kind} index {index} out of range 0..8")]
    OutOfRange { kind: &'static str, index: usize },
    #[error("cannot parse {kind} from {input:?}")]
    Parse { kind: &'static str, input: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("{party} supplied {got} message bits, expected {expected}")]
    MessageLength {
        party: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("announcement {announcement} for group {group} is inconsistent with every candidate state")]
    InconsistentAnnouncement { group: usize, announcement: String },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttackError {
    #[error("entangle-measure amplitudes must be real, nonnegative, with alpha^2 + beta^2 = 1 (got alpha={alpha}, beta={beta})")]
    InvalidAmplitudes { alpha: f64, beta: f64 },
    #[error("check template {template} cannot observe an attack on {target}")]
    TargetMismatch {
        template: &'static str,
        target: &'static str,
    },
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("efficiency denominator q_t + b_t is zero")]
    ZeroDenominator,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}
