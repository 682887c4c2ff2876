use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid edge{}: {detail}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    InvalidEdge { line: Option<usize>, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure in {context}{}", iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    NumericalFailure {
        context: String,
        iteration: Option<usize>,
    },

    #[error("design matrix has rank {rank} but {p} columns (n = {n})")]
    RankDeficientDesign { rank: usize, p: usize, n: usize },

    #[error("requested {requested} basis vectors but only {available} are available")]
    InsufficientBasis { requested: usize, available: usize },

    #[error("ICAR models absorb the intercept; remove the explicit intercept column")]
    ImplicitInterceptConflict,

    #[error("penalty rank condition fails: rank(F) = {rank}, a_eps/2 + (n-p-q)/2 = {margin}")]
    InvalidPenaltyRank { rank: usize, margin: f64 },

    #[error("IWLS did not converge: {0}")]
    IwlsDiverged(String),

    #[error("moment undefined: {0}")]
    MomentUndefined(String),

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("graph has {0} connected components; model fitting requires a connected graph")]
    DisconnectedGraph(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error{}: {msg}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn numerical(context: impl Into<String>) -> Self {
        Error::NumericalFailure {
            context: context.into(),
            iteration: None,
        }
    }

    /// True for errors that come from the numerics rather than from input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure { .. } | Error::IwlsDiverged(_) | Error::MomentUndefined(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
