use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes, widths or indices that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    /// Hyperparameters outside their valid range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation was called in the wrong state (e.g. backward without forward).
    #[error("usage error: {0}")]
    Usage(String),

    /// A cone's support exceeded the configured limit; an exact truth table
    /// would be too large and a SAT backend is needed instead.
    #[error("cone of layer {layer} gate {gate} has support {support} > limit {limit}")]
    OversizedCone {
        layer: usize,
        gate: usize,
        support: usize,
        limit: usize,
    },
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
