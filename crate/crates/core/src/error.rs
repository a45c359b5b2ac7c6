use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a Fock basis needs at least one mode")]
    NoModes,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("photon number mismatch: {left} != {right}")]
    PhotonMismatch { left: usize, right: usize },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("matrix is not a contraction (largest eigenvalue of Ω†Ω is {0})")]
    NotSubunitary(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("codewords are not orthonormal (max Gram deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("code fails the recoverability condition (residual {0:e})")]
    NotCorrectable(f64),

    #[error("error matrix G is not proportional to identity (deviation {0:e})")]
    GNotScalar(f64),

    #[error("element is not in the π-rotation subgroup")]
    NotInSubgroup,

    #[error("no feasible point found: {0}")]
    Infeasible(String),

    #[error("tomography: {0}")]
    Tomography(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
