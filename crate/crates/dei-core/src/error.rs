//! Error types for each pipeline stage, plus the top-level error that maps
//! onto process exit codes and HTTP statuses.

use thiserror::Error;

use crate::types::CandidateKey;

/// Errors from corpus ingestion and validation.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{source_name}:{line}: malformed JSON line: {message}")]
    ParseLine {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{source_name}: {message}")]
    Format {
        source_name: String,
        message: String,
    },
    #[error("duplicate instance_id {instance_id} in {source_name}")]
    DuplicateInstance {
        source_name: String,
        instance_id: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Errors from parsing or applying unified diffs.
#[derive(Debug, Error)]
pub enum DiffError {
    #[error("malformed diff in {file} hunk {hunk_index}: {detail}")]
    Malformed {
        file: String,
        hunk_index: usize,
        detail: String,
    },
    #[error("patch does not apply to {file} hunk {hunk_index} at line {line}: {detail}")]
    ApplyConflict {
        file: String,
        hunk_index: usize,
        line: usize,
        detail: String,
    },
    #[error("file {file} not present in bundle for instance {instance_id}")]
    MissingFile { instance_id: String, file: String },
}

/// Errors from span loading and context assembly.
#[derive(Debug, Error)]
pub enum ContextError {
    #[error("{source_name}:{line}: {message}")]
    SpanFormat {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error(
        "span {file_path}:{start_line}-{end_line} declares {declared} lines but code has {actual}"
    )]
    SpanLineCount {
        file_path: String,
        start_line: u32,
        end_line: u32,
        declared: usize,
        actual: usize,
    },
    #[error("token budget {budget} too small to hold the issue text ({issue_tokens} tokens)")]
    BudgetTooSmall { budget: usize, issue_tokens: usize },
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// Errors from committee scoring and the vote ledger.
#[derive(Debug, Error)]
pub enum CommitteeError {
    #[error("invalid committee config: {0}")]
    Config(String),
    #[error("backend transport failure scoring {instance_id} candidate {candidate}: {detail}")]
    Transport {
        instance_id: String,
        candidate: CandidateKey,
        detail: String,
    },
    #[error("ledger line {line}: {message}")]
    LedgerFormat { line: usize, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ledger i/o: {0}")]
    LedgerIo(#[from] std::io::Error),
}

/// Errors from ranking and prediction emission.
#[derive(Debug, Error)]
pub enum RerankError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Errors from metric computation.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("k={k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("n={n} out of range 1..={k}")]
    NOutOfRange { n: usize, k: usize },
    #[error("validation error: {0}")]
    Validation(String),
}

/// Top-level pipeline error.
///
/// Exit-code contract: 1 validation, 2 transport, 3 internal.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Committee(#[from] CommitteeError),
    #[error(transparent)]
    Rerank(#[from] RerankError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("config error: {0}")]
    Config(String),
    #[error("instance {instance_id} candidate {candidate}: {source}")]
    Candidate {
        instance_id: String,
        candidate: CandidateKey,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error class used for exit codes and HTTP status mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Transport,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Transport => 2,
            ErrorKind::Internal => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Validation => "validation",
            ErrorKind::Transport => "transport",
            ErrorKind::Internal => "internal",
        }
    }
}

impl std::str::FromStr for ErrorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "validation" => Ok(ErrorKind::Validation),
            "transport" => Ok(ErrorKind::Transport),
            "internal" => Ok(ErrorKind::Internal),
            other => Err(format!("unknown error kind {other}")),
        }
    }
}

impl PipelineError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            PipelineError::Committee(CommitteeError::Transport { .. }) => ErrorKind::Transport,
            PipelineError::Io { .. } => ErrorKind::Internal,
            PipelineError::Committee(CommitteeError::LedgerIo(_)) => ErrorKind::Internal,
            PipelineError::Candidate { source, .. } => source.kind(),
            _ => ErrorKind::Validation,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_contract() {
        let validation = PipelineError::Config("bad".into());
        assert_eq!(validation.exit_code(), 1);

        let transport = PipelineError::Committee(CommitteeError::Transport {
            instance_id: "x".into(),
            candidate: CandidateKey::new("a", 0),
            detail: "connection refused".into(),
        });
        assert_eq!(transport.exit_code(), 2);

        let internal = PipelineError::Io {
            path: "out".into(),
            source: std::io::Error::other("disk"),
        };
        assert_eq!(internal.exit_code(), 3);
    }
}
