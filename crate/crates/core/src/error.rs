//! Error type shared by all modules.

use crate::flow::FlowReport;
use crate::invariants::Signature;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("frame is numerically singular (condition number {condition:.3e})")]
    SingularFrame { condition: f64 },

    #[error("Jacobi identity violated (residual {residual:.3e}, tolerance {tol:.3e})")]
    JacobiViolation { residual: f64, tol: f64 },

    #[error(
        "structure tensor is not nilpotent (central series stabilises at dimension {stable_dim})"
    )]
    NotNilpotent { stable_dim: usize },

    #[error("input matrix is not symmetric")]
    NonSymmetricInput,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown algebra {name:?}; available: {available}")]
    UnknownAlgebra { name: String, available: String },

    #[error("decomposition hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("flow did not converge within the iteration budget (best residual {:.3e})", report.residual)]
    MaxIterations { report: Box<FlowReport> },

    #[error("flow iterates diverged (norm grew by factor {factor:.3e})")]
    Divergence { factor: f64 },

    #[error("target signature {target} is not attainable: {reason}")]
    TargetNotInSet { target: Signature, reason: String },

    #[error("Newton solve failed to reach tolerance (residual {residual:.3e})")]
    NewtonFailed { residual: f64 },

    #[error("achieved signature {achieved} does not match target {target}")]
    SignatureMismatch {
        achieved: Signature,
        target: Signature,
    },

    #[error("middle block is numerically singular (condition number {condition:.3e})")]
    MiddleBlockSingular { condition: f64 },
}
