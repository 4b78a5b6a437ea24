use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to reach its target accuracy.
    #[error("numerical error in {routine}: achieved {achieved:e}, requested {requested:e}")]
    Numerical {
        routine: &'static str,
        achieved: f64,
        requested: f64,
    },

    /// Every particle carries zero weight.
    #[error("particle system degenerated at step {step}: all weights are zero")]
    Degenerate { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
