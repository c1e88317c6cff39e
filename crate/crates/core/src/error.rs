//! Error type shared by all modules.
//!
//! Diagnostic magnitudes are stored as `f64` regardless of the working scalar;
//! they are reporting surface, not data the algorithms consume.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum MedError {
    #[error(
        "matrix is not Hermitian: symmetry residual {residual:.3e} exceeds tolerance {tol:.3e}"
    )]
    NotHermitian { residual: f64, tol: f64 },

    #[error(
        "matrix is not positive semidefinite: eigenvalue {min_eigenvalue:.3e} below -{tol:.3e}"
    )]
    NotPositiveSemidefinite { min_eigenvalue: f64, tol: f64 },

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("block index ({block}, {inner}) out of range for profile {profile}")]
    IndexOutOfRange {
        block: usize,
        inner: usize,
        profile: String,
    },

    #[error("shape mismatch: {detail}")]
    ShapeMismatch { detail: String },

    #[error("rank profile mismatch: {detail}")]
    ProfileMismatch { detail: String },

    #[error("invalid rank profile: {0}")]
    InvalidProfile(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("state {block} has numerical rank {found}, expected {expected}")]
    RankMismatch {
        block: usize,
        expected: usize,
        found: usize,
    },

    #[error("could not draw a well-conditioned congruence transform in {attempts} attempts")]
    DegenerateDraw { attempts: usize },

    #[error("matrix is numerically singular")]
    Singular,

    #[error("linear system for path derivatives is singular")]
    SingularLinearSystem,

    #[error("solver exceeded {iterations} iterations (residual {residual:.3e})")]
    MaxIterationsExceeded { iterations: usize, residual: f64 },

    #[error("line search could not restore positive definiteness of the iterate")]
    NonPositiveIterate,

    #[error("analytic continuation broke down after {levels} interval halvings")]
    PathBreakdown { levels: usize },

    #[error("average state is numerically singular; square-root measurement undefined")]
    SingularAverage,
}

impl MedError {
    /// Stable machine-readable tag, used by the CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            MedError::NotHermitian { .. } => "NotHermitian",
            MedError::NotPositiveSemidefinite { .. } => "NotPositiveSemidefinite",
            MedError::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            MedError::IndexOutOfRange { .. } => "IndexOutOfRange",
            MedError::ShapeMismatch { .. } => "ShapeMismatch",
            MedError::ProfileMismatch { .. } => "ProfileMismatch",
            MedError::InvalidProfile(_) => "InvalidProfile",
            MedError::InvalidEnsemble(_) => "InvalidEnsemble",
            MedError::RankMismatch { .. } => "RankMismatch",
            MedError::DegenerateDraw { .. } => "DegenerateDraw",
            MedError::Singular => "Singular",
            MedError::SingularLinearSystem => "SingularLinearSystem",
            MedError::MaxIterationsExceeded { .. } => "MaxIterationsExceeded",
            MedError::NonPositiveIterate => "NonPositiveIterate",
            MedError::PathBreakdown { .. } => "PathBreakdown",
            MedError::SingularAverage => "SingularAverage",
        }
    }
}

pub type Result<V> = std::result::Result<V, MedError>;
