use thiserror::Error;

/// Errors raised across the numeric core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Rank prerequisite of the data stack failed; the attack or synthesis
    /// cannot proceed on this dataset.
    #[error("insufficient excitation: {0}")]
    InsufficientExcitation(String),

    /// The dataset admits more than one compatible model.
    #[error("non-unique model: {0}")]
    NonUniqueModel(String),

    #[error("synthesis failed: {0}")]
    Synthesis(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("input generation failed: {0}")]
    Generation(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A pipeline step failed; wraps the underlying error with the step label.
    #[error("step `{step}` failed: {source}")]
    Step {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach a pipeline step label to an error bubbling out of a module.
    pub fn in_step(step: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Step {
            step,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
