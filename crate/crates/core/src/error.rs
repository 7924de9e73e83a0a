use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Malformed decoder weight file or audio file.
    #[error("format error{}: {message}", tensor.as_ref().map(|t| format!(" in tensor `{t}`")).unwrap_or_default())]
    Format { tensor: Option<String>, message: String },

    /// Non-finite value produced during sampling or inference.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("EM failed at iteration {iteration}: {source}")]
    Em {
        iteration: usize,
        /// Log-likelihood trace recorded up to the failing iteration.
        partial_trace: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(tensor: Option<&str>, msg: impl Into<String>) -> Self {
        Error::Format {
            tensor: tensor.map(str::to_owned),
            message: msg.into(),
        }
    }

    /// True for errors caused by bad input data or files rather than numerics.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::InvalidInput(_) | Error::Format { .. } | Error::Io(_) => true,
            Error::Em { source, .. } => source.is_data_error(),
            Error::Numerical(_) => false,
        }
    }

    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) => true,
            Error::Em { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl From<hound::Error> for Error {
    fn from(e: hound::Error) -> Self {
        match e {
            hound::Error::IoError(io) => Error::Io(io),
            other => Error::format(None, other.to_string()),
        }
    }
}
