use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot parse configuration: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("cannot load data from {path}: {source}")]
    Data {
        path: PathBuf,
        #[source]
        source: mssvdd::Error,
    },

    #[error(transparent)]
    Core(#[from] mssvdd::Error),

    #[error("no feasible grid cell for {0}")]
    NoFeasibleCell(String),

    #[error("model file format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptFile(String),

    #[error("nothing to report: {0}")]
    EmptyReport(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::ConfigParse(_) => 2,
            Self::Data { .. } | Self::CorruptFile(_) | Self::VersionMismatch { .. } | Self::Io { .. } => 3,
            Self::Core(e) if is_data_error(e) => 3,
            _ => 1,
        }
    }
}

fn is_data_error(e: &mssvdd::Error) -> bool {
    use mssvdd::Error as E;
    matches!(
        e,
        E::Parse { .. } | E::ColumnCount { .. } | E::UnknownLabel(_) | E::TooFewItems(_) | E::Io(_) | E::Decode(_)
    )
}

pub type Result<T> = std::result::Result<T, HarnessError>;
