use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A register value does not fit in the register.
    #[error("value {value} out of range for register {reg} ({qubits} qubits)")]
    Range { reg: String, value: u64, qubits: usize },

    /// Projection onto an outcome with zero probability, or normalization of a zero vector.
    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("unknown register {0:?}")]
    UnknownRegister(String),

    /// Dimensions or layouts do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Invalid parameters supplied by the caller.
    #[error("usage: {0}")]
    Usage(String),

    /// A circuit program violates a well-formedness rule.
    #[error("ill-formed program: {0}")]
    Program(String),

    /// A rewrite pass cannot be applied to the given program.
    #[error("rewrite not applicable: {0}")]
    RewriteNotApplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
