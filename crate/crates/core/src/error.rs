use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("requested {requested} qubits, supported range is 1..={max}")]
    Capacity { requested: usize, max: usize },

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("two-qubit gate applied to the same qubit {0} twice")]
    DuplicateQubit(usize),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid label {0}: expected -1 or +1")]
    InvalidLabel(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph is disconnected; components: {components:?}")]
    DisconnectedGraph { components: Vec<Vec<usize>> },

    #[error("non-finite gradient at node {node}, iteration {iteration}: {detail}")]
    NonFiniteGradient {
        node: usize,
        iteration: usize,
        detail: String,
    },

    #[error("wav parse error in `{chunk}` chunk: {message}")]
    WavParse { chunk: String, message: String },

    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Capacity { .. } => "capacity",
            Error::QubitIndex { .. } => "qubit_index",
            Error::DuplicateQubit(_) => "duplicate_qubit",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::DegenerateInput(_) => "degenerate_input",
            Error::InvalidLabel(_) => "invalid_label",
            Error::EmptyInput(_) => "empty_input",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DisconnectedGraph { .. } => "disconnected_graph",
            Error::NonFiniteGradient { .. } => "non_finite_gradient",
            Error::WavParse { .. } => "wav_parse",
            Error::Csv { .. } => "csv",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
