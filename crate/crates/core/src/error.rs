use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input shape: {0}")]
    InputShape(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numerical estimate did not meet its quality gate. The best value
    /// found so far is carried along.
    #[error("numerical quality: {what} (best estimate {best_estimate})")]
    NumericalQuality { what: String, best_estimate: f64 },

    #[error("branch degeneracy at nu = {nu}, q = {q}: candidates {first} and {second}")]
    BranchDegeneracy {
        nu: f64,
        q: f64,
        first: f64,
        second: f64,
    },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("basis too small: packet weight at the edge exceeds 1e-8 of its peak, use half-bandwidth >= {suggested}")]
    BasisSize { suggested: usize },

    #[error(
        "difference stencil crossed a branch degeneracy at k = {k} (nu = {nu}, step {step}); \
         at integer nu the quasi-energy has a gap and no derivative, otherwise retry with a smaller step"
    )]
    Stencil { k: f64, nu: f64, step: f64 },

    #[error("classical period unresolved: {0}")]
    Unresolved(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
