use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed YUV4MPEG2 or raw planar input.
    #[error("video parse error at byte {offset}: {message}")]
    VideoParse { offset: u64, message: String },

    /// A dataset file violated the canonical schema or a referential invariant.
    #[error("{file} row {row}: {message}")]
    Ingest {
        file: String,
        row: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("rank-deficient design; linearly dependent columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Process exit code: 1 validation, 2 I/O or parse, 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::RankDeficient { .. } | Error::Ingest { .. } => 1,
            Error::VideoParse { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 2,
            Error::NonConvergence(_) => 3,
        }
    }
}
