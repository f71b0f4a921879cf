use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Validation { name: &'static str, reason: String },

    #[error("interface x0 = {x0} is not a grid node for N = {n}; nearest admissible x0 = {nearest}")]
    Alignment { x0: f64, n: usize, nearest: f64 },

    #[error("field length {got} does not match mesh node count {expected}")]
    Shape { expected: usize, got: usize },

    #[error("trace violation: {0}")]
    Trace(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("eigensolver did not converge for a {0}x{0} matrix")]
    Eigensolver(usize),

    #[error("unstable time stepping with dt = {dt}: energy {energy:e} exceeds 2 E(0) = {limit:e}")]
    Instability { dt: f64, energy: f64, limit: f64 },

    #[error("data error: {0}")]
    Data(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("sub-ellipticity not certified: {0}")]
    NotSubelliptic(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub(crate) fn validation(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Validation {
        name,
        reason: reason.into(),
    }
}
