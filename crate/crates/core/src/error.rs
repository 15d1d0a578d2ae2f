use thiserror::Error;

/// Errors raised by the numerical routines, the trainers and the loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is rank deficient: numerical rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("requested dimension {requested} exceeds numerical rank {rank}")]
    DimensionTooLarge { requested: usize, rank: usize },

    #[error("box bound C = {c} is infeasible for {points} points (need C * points >= 1)")]
    InfeasibleC { c: f64, points: usize },

    #[error("at least {needed} points are required, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("non-finite gradient at iteration {iteration}, modality {modality}")]
    NonFiniteGradient { iteration: usize, modality: usize },

    #[error("projection collapsed: every eigenvalue of W K W^T is below the cutoff")]
    DegenerateProjection,

    #[error("centered kernel has numerical rank 0")]
    DegenerateKernel,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("decision strategy {strategy} needs at least {needed} modalities, got {found}")]
    StrategyArity {
        strategy: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("metric undefined: the {0} class is empty")]
    EmptyClass(&'static str),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("target label {0:?} does not occur in the data")]
    UnknownLabel(String),

    #[error("too few items: {0}")]
    TooFewItems(String),

    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed binary data: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
