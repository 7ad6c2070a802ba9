use thiserror::Error;

/// Errors raised by the simulator, search-space codec, trainer and search.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for a {qubits}-qubit register")]
    QubitIndex { index: usize, qubits: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("gene {gene} out of range, the layer space has {size} entries")]
    GeneRange { gene: u64, size: u64 },

    #[error("failed to load data: {0}")]
    Load(String),

    #[error("evaluation of genome [{genome}] failed: {source}")]
    Evaluation {
        genome: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
