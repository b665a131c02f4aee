use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    // attribute space
    #[error("class `{0}` has no attribute mass and cannot be normalized")]
    AllZeroColumn(String),
    #[error("attribute matrix must be column-normalized first")]
    NotNormalized,
    #[error("attribute matrix is empty")]
    EmptyMatrix,
    #[error("entropy is undefined for a column with zero mass")]
    AllZero,
    #[error("class lists do not match: {0}")]
    ClassMismatch(String),
    #[error("attribute matrix is already expanded (row pairs sum to one)")]
    AlreadyExpanded,
    #[error("invalid attribute matrix: {0}")]
    InvalidMatrix(String),

    // files
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // dataset and splits
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("unknown sample `{0}`")]
    UnknownSample(String),
    #[error("duplicate sample id `{0}`")]
    DuplicateSampleId(String),
    #[error("sample `{0}` appears in more than one partition")]
    SplitOverlap(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("infeasible synthetic configuration: {0}")]
    InfeasibleConfig(String),

    // models
    #[error("no training data")]
    NoTrainingData,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("every attribute row is constant over the seen classes")]
    NoUsableAttributes,
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("candidate `{0}` listed twice")]
    DuplicateCandidate(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),

    // rank aggregation
    #[error("kernel bandwidth must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("all aggregation weights are zero")]
    AllZeroWeights,
    #[error("aggregation weight {index} is not a finite non-negative number")]
    NonFiniteWeight { index: usize },

    // bounds
    #[error("empirical CDF has no points")]
    EmptyCdf,
    #[error("invalid CDF: {0}")]
    InvalidCdf(String),
    #[error("tolerated attribute error is zero; the required sample count is unbounded")]
    ZeroTolerance,
    #[error("invalid bound input: {0}")]
    InvalidBoundInput(String),

    // evaluation
    #[error("no prediction for sample `{0}`")]
    MissingPrediction(String),
    #[error("prediction coverage mismatch: {0}")]
    CoverageMismatch(String),
    #[error("{0} test pool is empty")]
    EmptyPool(&'static str),
    #[error("need at least two candidate classes, got {0}")]
    TooFewCandidates(usize),
}

impl Error {
    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by numerics rather than by inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroTolerance | Error::AllZeroWeights | Error::NonFiniteWeight { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
