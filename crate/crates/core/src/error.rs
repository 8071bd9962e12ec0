use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Index pair outside `1 <= j <= n`, or an otherwise malformed request.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("path length {n} exceeds table range n_max = {n_max}")]
    OutOfRange { n: usize, n_max: usize },

    #[error("unknown mechanism type `{0}`")]
    UnknownMechanism(String),

    #[error("unknown property `{0}`")]
    UnknownProperty(String),

    #[error("unknown deviation class `{0}`")]
    UnknownDeviationClass(String),

    #[error("malformed specification: {0}")]
    Spec(String),

    #[error("no answer holder after {retries} generation attempts")]
    GenerationExhausted { retries: usize },

    #[error("inapplicable deviation: {0}")]
    InapplicableDeviation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Spec(e.to_string())
    }
}
