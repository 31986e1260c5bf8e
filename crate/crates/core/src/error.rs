use std::path::PathBuf;

use thiserror::Error;
use tsgan_autograd::TensorError;
use tsgan_nn::NnError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("spectrogram: {0}")]
    Stft(String),

    #[error("config `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("non-finite {what} at step {step}")]
    NonFinite { what: String, step: u64 },

    #[error("evaluation: {0}")]
    Eval(String),

    #[error("missing artifact {0}")]
    Missing(PathBuf),

    #[error(transparent)]
    Nn(#[from] NnError),

    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn config(key: &str, msg: impl Into<String>) -> Error {
        Error::Config {
            key: key.to_string(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
