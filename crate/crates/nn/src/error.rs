use thiserror::Error;
use tsgan_autograd::TensorError;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("layer {index} ({kind}): {source}")]
    Layer {
        index: usize,
        kind: &'static str,
        #[source]
        source: TensorError,
    },

    #[error("layer {index} ({kind}): {msg}")]
    InvalidSpec {
        index: usize,
        kind: &'static str,
        msg: String,
    },

    #[error("network expects per-sample input {expected:?}, got batch shape {got:?}")]
    InputShape { expected: Vec<usize>, got: Vec<usize> },

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed checkpoint: {0}")]
    Format(String),

    #[error("checkpoint has no record `{0}`")]
    MissingRecord(String),

    #[error("record `{name}` has shape {found:?}, expected {expected:?}")]
    RecordShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;
