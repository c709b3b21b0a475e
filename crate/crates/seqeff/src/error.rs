//! Crate-wide error type.

use thiserror::Error;

/// Errors raised across the effect-algebra toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.6e} below -{tol:.3e}")]
    NotPsd { eigenvalue: f64, tol: f64 },

    #[error("exponent must be strictly positive, got {exponent}")]
    BadExponent { exponent: f64 },

    #[error("scalar must lie in [0, 1], got {value}")]
    BadScalar { value: f64 },

    #[error("block index {index} out of range for {blocks} blocks")]
    BadIndex { index: usize, blocks: usize },

    #[error("algebra specs do not match: {context}")]
    SpecMismatch { context: String },

    #[error("element is not an effect: {context}")]
    NotEffect { context: String },

    #[error("element is not a projection: {context}")]
    NotProjection { context: String },

    #[error("invalid map descriptor: {0}")]
    DescriptorInvalid(String),

    #[error(
        "oracle output leaves the effect interval in block {block}: eigenvalue {eigenvalue:.6e}"
    )]
    OracleRangeError { block: usize, eigenvalue: f64 },

    #[error("map is not an E-isomorphism: additivity residual {residual:.3e}")]
    NotEIsomorphism { residual: f64 },

    #[error("spec is not fully commutative: {context}")]
    NotCommutativeSpec { context: String },

    #[error("commutative recovery failed: {0}")]
    RecoveryFailed(String),

    #[error("linear extension is not a Jordan map: {0}")]
    NotJordan(String),

    #[error("block {block} is neither multiplicative nor antimultiplicative (forward {forward:.3e}, reversed {reversed:.3e})")]
    AmbiguousKind {
        block: usize,
        forward: f64,
        reversed: f64,
    },

    #[error("block correspondence failed: {0}")]
    CorrespondenceFailed(String),

    #[error("schema error: {0}")]
    SchemaError(String),

    #[error("invariant violated: {0}")]
    InvariantError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
