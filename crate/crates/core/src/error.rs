use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = NeoError> = std::result::Result<T, E>;

/// Process exit codes used by the `neo` binary.
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum NeoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid residue '{0}' (expected one of ACDEFGHIKLMNPQRSTVWY)")]
    InvalidResidue(char),

    #[error("sequence length {len} outside allowed range {min}..={max}")]
    Length { len: usize, min: usize, max: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("column '{0}' has no present values")]
    EmptyColumn(String),

    #[error("category '{value}' was not seen when fitting column '{column}'")]
    UnseenCategory { column: String, value: String },

    #[error("bundle version mismatch: expected '{expected}', found '{found}'")]
    BundleVersion { expected: String, found: String },

    #[error("corrupt bundle at byte offset {offset}: {message}")]
    CorruptBundle { offset: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<NeoError>,
    },
}

impl NeoError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NeoError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        NeoError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Exit code class: 1 config, 2 data, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            NeoError::Config(_) | NeoError::BundleVersion { .. } => EXIT_CONFIG,
            NeoError::Parse { .. }
            | NeoError::InvalidResidue(_)
            | NeoError::Length { .. }
            | NeoError::Data(_)
            | NeoError::EmptyColumn(_)
            | NeoError::UnseenCategory { .. }
            | NeoError::CorruptBundle { .. } => EXIT_DATA,
            NeoError::Stage { source, .. } => source.exit_code(),
            NeoError::Dimension { .. } | NeoError::Io { .. } | NeoError::Json(_) => EXIT_RUNTIME,
        }
    }
}
