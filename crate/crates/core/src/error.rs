use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("unsupported gate `{name}` at line {line}")]
    UnsupportedGate { name: String, line: usize },

    #[error("only a single qreg is supported (found `{0}`)")]
    MultipleRegisters(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("nothing to cut: circuit has no two-qubit gates")]
    NothingToCut,

    #[error("no feasible cut within budget of {budget} expansions")]
    BudgetExhausted { budget: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid topology field `{field}`: {msg}")]
    Topology { field: String, msg: String },

    #[error("unknown topology preset `{0}`")]
    UnknownPreset(String),

    #[error("insufficient capacity: {needed} logical qubits, {available} data qubits")]
    Capacity { needed: usize, available: usize },

    #[error("gate {gate} cannot be gate-cut; use wire cuts around it instead")]
    UnsupportedGateCut { gate: String },

    #[error("variant count {count} exceeds the cap of {cap}; use fewer cuts")]
    TooManyVariants { count: String, cap: u64 },

    #[error("simulation of {qubits} qubits exceeds the limit of {max}")]
    TooManyQubits { qubits: usize, max: usize },

    #[error("branch count 2^{depth} exceeds the cap 2^{cap}")]
    BranchExplosion { depth: usize, cap: usize },

    #[error("disconnected member set for contraction")]
    DisconnectedMembers,

    #[error("missing result for variant {0}")]
    MissingResult(usize),

    #[error("observable `{obs}` does not match {qubits} qubits")]
    Observable { obs: String, qubits: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
