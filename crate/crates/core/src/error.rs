//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by dataset handling, model fitting, screening and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular design matrix beyond ridge repair")]
    SingularDesign,

    #[error("candidate mask is not nested in the reference mask")]
    MaskNotNested,

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("p = {0} predictors exceeds the exhaustive enumeration limit of {max}", max = crate::model_space::MAX_ENUMERATION_PREDICTORS)]
    TooManyPredictors(usize),

    #[error("lower boundary model set is empty")]
    EmptyLbmSet,

    #[error("no predictor has positive inclusion importance")]
    NoPositiveImportance,

    #[error("bad fold count: {0}")]
    BadFoldCount(String),

    #[error("degenerate fold: a training split has single-class responses")]
    DegenerateFold,

    #[error("Cholesky factorization failed: matrix is not positive definite")]
    CholeskyFailure,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid genotype '{value}' at line {line}")]
    InvalidGenotype { line: usize, value: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularDesign | Error::CholeskyFailure | Error::DegenerateFold
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
