use thiserror::Error;

/// Errors surfaced by fitting, covariance estimation, and model search.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("nonfinite value in linear predictor or link evaluation (theta = {theta})")]
    NonfiniteLink { theta: f64 },

    #[error("input contains NaN or infinite values")]
    NonfiniteInput,

    #[error("linear-family dispersion not yet resolved; fit the model first")]
    DispersionUnresolved,

    #[error("dispersion undefined: n = {n} <= d = {d} leaves no residual degrees of freedom")]
    DispersionUndefined { n: usize, d: usize },

    #[error("dispersion degenerate: residual sum of squares is numerically zero")]
    DispersionDegenerate,

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    DesignRank { rank: usize, cols: usize },

    #[error("model degenerate: {0}")]
    ModelDegenerate(String),

    #[error("invalid response at row {index}: {value} not valid for {family} family")]
    InvalidResponse {
        index: usize,
        value: f64,
        family: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SIC decomposition undefined: B-hat is numerically singular")]
    DecompositionUndefined,

    #[error("too many predictors for exhaustive enumeration: p = {p} > {max}")]
    TooManyPredictors { p: usize, max: usize },

    #[error("selection impossible: every candidate model failed to fit")]
    SelectionImpossible,
}

pub type Result<T> = std::result::Result<T, Error>;
