use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} supports at most {max} qubits, got {requested}")]
    TooManyQubits {
        what: &'static str,
        requested: usize,
        max: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("singular basis: {0}")]
    SingularBasis(String),

    #[error("trace collapsed to {trace:.3e} at t = {time}")]
    TraceCollapse { time: f64, trace: f64 },

    #[error("state is not normalized: measured norm {norm}")]
    Unnormalized { norm: f64 },

    #[error("state belongs to basis {found:#x}, overlaps were measured on {expected:#x}")]
    BasisMismatch { expected: u64, found: u64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(err: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(err.to_string())
    }
}

impl Error {
    /// True for failures of the numerical pipeline rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularBasis(_)
                | Error::TraceCollapse { .. }
                | Error::NotHermitian { .. }
                | Error::Linalg(_)
        )
    }
}
