use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Problem size outside the supported range (qubits, registers, rounds).
    #[error("size error: {0}")]
    Size(String),
    /// Input failed a structural check (Hermiticity, unitarity, shape).
    #[error("validation error: {0}")]
    Validation(String),
    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Grid too coarse for the requested inverse temperature.
    #[error("precision error: {0}")]
    Precision(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("division error: {0}")]
    Division(String),
    /// The generator has more than one stationary state.
    #[error("uniqueness violation: null space of dimension {dim} (tolerance {tol:e})")]
    Uniqueness { dim: usize, tol: f64 },
    #[error("rank error: {0}")]
    Rank(String),
    #[error("numerical conditioning error: {0}")]
    Conditioning(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}
