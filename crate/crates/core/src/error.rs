use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // Data ingestion and preprocessing.
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("parse error at data row {row}, column {col}: {msg}")]
    ParseError { row: usize, col: usize, msg: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("dataset has no rows or no predictors")]
    EmptyData,
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("column {0} has zero variance")]
    ConstantColumn(usize),
    #[error("response is identically zero after centering")]
    ZeroResponse,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    // Linear programming.
    #[error("malformed linear program: {0}")]
    MalformedLp(String),
    #[error("numerical breakdown in simplex: {0}")]
    NumericalBreakdown(String),
    #[error("simplex exceeded the iteration limit of {0}")]
    IterationLimit(usize),
    #[error("vertex enumeration needs {0} combinations, above the cap")]
    TooLarge(u128),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,

    // Estimation.
    #[error("Gram matrix is singular or too ill-conditioned (condition number {0:e})")]
    SingularGram(f64),
    #[error("support block of the Gram matrix is singular")]
    SingularC11,
    #[error("coefficient {0} is nonzero but carries an infinite weight")]
    InfinitePenalty(usize),
    #[error("every coordinate has an infinite weight")]
    AllExcluded,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("coordinate descent did not converge in {0} sweeps")]
    MaxIterations(usize),

    // Model selection and simulation.
    #[error("fold count k = {k} is invalid for n = {n}")]
    BadK { k: usize, n: usize },
    #[error("correlation matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("signal precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// True for errors raised by the LP engine or the fitting routines, as
    /// opposed to malformed input data.
    pub fn is_solver_error(&self) -> bool {
        matches!(
            self,
            Error::MalformedLp(_)
                | Error::NumericalBreakdown(_)
                | Error::IterationLimit(_)
                | Error::TooLarge(_)
                | Error::Infeasible
                | Error::Unbounded
                | Error::SingularGram(_)
                | Error::SingularC11
                | Error::InfinitePenalty(_)
                | Error::AllExcluded
                | Error::MaxIterations(_)
        )
    }
}
