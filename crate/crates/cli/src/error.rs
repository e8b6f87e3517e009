use serde::Serialize;

use artlens_core::catalog::CatalogError;
use artlens_core::curation::PipelineError;
use artlens_core::explore::{EventError, SessionError};
use artlens_core::ingestion::IngestError;
use artlens_core::metrics::MetricsError;

/// Stable error codes and the process exit status each maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Unexpected I/O failure. Exit 1.
    IoError,
    /// Bad flag, environment variable or config file value. Exit 2.
    InvalidConfig,
    /// An earlier stage has not run (no artworks, no detections, no log). Exit 3.
    MissingPrerequisite,
    /// Another process holds the catalog lock. Exit 4.
    CatalogLocked,
    /// The catalog or a snapshot failed an integrity check. Exit 5.
    IntegrityViolation,
    /// A collection API, image source or detector failed. Exit 6.
    UpstreamFailure,
    /// An input file could not be used. Exit 7.
    InvalidInput,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::IoError => "io_error",
            Self::InvalidConfig => "invalid_config",
            Self::MissingPrerequisite => "missing_prerequisite",
            Self::CatalogLocked => "catalog_locked",
            Self::IntegrityViolation => "integrity_violation",
            Self::UpstreamFailure => "upstream_failure",
            Self::InvalidInput => "invalid_input",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Self::IoError => 1,
            Self::InvalidConfig => 2,
            Self::MissingPrerequisite => 3,
            Self::CatalogLocked => 4,
            Self::IntegrityViolation => 5,
            Self::UpstreamFailure => 6,
            Self::InvalidInput => 7,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, Serialize)]
#[error("{message}")]
pub struct CliError {
    pub code: ErrorCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::InvalidConfig, message)
    }

    pub fn missing(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::MissingPrerequisite, message)
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::InvalidInput, message)
    }

    pub fn io(e: std::io::Error) -> Self {
        Self::new(ErrorCode::IoError, e.to_string())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": { "code": self.code, "message": self.message } })
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        let code = match &e {
            CatalogError::Locked(_) => ErrorCode::CatalogLocked,
            CatalogError::Io(_) => ErrorCode::IoError,
            CatalogError::Corrupt { .. } | CatalogError::Image(_) => ErrorCode::IntegrityViolation,
            _ => ErrorCode::InvalidInput,
        };
        Self::new(code, e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let code = match &e {
            IngestError::Config(_) => ErrorCode::InvalidConfig,
            IngestError::Io(_) => ErrorCode::IoError,
            IngestError::UnknownDimensions(_) => ErrorCode::InvalidInput,
            _ => ErrorCode::UpstreamFailure,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Catalog(e) => e.into(),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<EventError> for CliError {
    fn from(e: EventError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e)
    }
}
