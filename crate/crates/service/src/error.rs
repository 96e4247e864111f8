//! Service errors and their HTTP mapping.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use modcanvas_core::analysis::ValidationReport;
use modcanvas_core::condition::ParseDiagnostic;
use modcanvas_core::h5p::{ExportError, H5pError};
use modcanvas_core::model::ModelError;
use modcanvas_core::remix::LedgerError;
use modcanvas_core::scheduler::SchedulerError;
use modcanvas_core::session::SessionError;
use serde_json::{json, Value};
use thiserror::Error;

use crate::chat::ChatError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("logon id {0} is taken")]
    LogonIdTaken(String),
    #[error("password must be at least {0} characters")]
    WeakPassword(usize),
    #[error("avatar name must be 1 to 32 characters")]
    InvalidAvatarName,
    #[error("wrong logon id or password")]
    BadCredentials,
    #[error("missing or unknown bearer token")]
    Unauthorized,
    #[error("{0}")]
    Forbidden(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("no module or avatar {0}")]
    UnknownTarget(String),
    #[error("expected version {expected}, current version is {current}")]
    VersionConflict { expected: u64, current: u64 },
    #[error("invalid condition: {}", .0.message)]
    InvalidCondition(ParseDiagnostic),
    #[error("composition has validation errors")]
    ValidationErrors(ValidationReport),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Chat(#[from] ChatError),
    #[error(transparent)]
    Package(#[from] H5pError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{0}")]
    BadRequest(String),
    #[error("storage failure: {0}")]
    Storage(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::LogonIdTaken(_) => "LogonIdTaken",
            ServiceError::WeakPassword(_) => "WeakPassword",
            ServiceError::InvalidAvatarName => "InvalidAvatarName",
            ServiceError::BadCredentials => "BadCredentials",
            ServiceError::Unauthorized => "Unauthorized",
            ServiceError::Forbidden(_) => "Forbidden",
            ServiceError::NotFound(_) => "NotFound",
            ServiceError::UnknownTarget(_) => "UnknownTarget",
            ServiceError::VersionConflict { .. } => "VersionConflict",
            ServiceError::InvalidCondition(_) => "InvalidCondition",
            ServiceError::ValidationErrors(_) => "ValidationErrorsPresent",
            ServiceError::Model(e) => match e {
                ModelError::EmptyTitle => "EmptyTitle",
                ModelError::CyclicComposition(_) => "CyclicComposition",
                ModelError::DuplicateDefault(_) => "DuplicateDefault",
                ModelError::DuplicatePriority { .. } => "DuplicatePriority",
                ModelError::UnknownNode(_) => "UnknownNode",
                ModelError::DuplicateNode(_) => "DuplicateNode",
                ModelError::StartNodeRemoval => "StartNodeRemoval",
                ModelError::UnknownEdge { .. } => "UnknownEdge",
                ModelError::InvalidCondition { .. } => "InvalidCondition",
            },
            ServiceError::Ledger(e) => match e {
                LedgerError::UnknownModule(_) => "UnknownModule",
                LedgerError::UnknownComposition(_) => "UnknownComposition",
                LedgerError::UnknownContent(_) => "UnknownContent",
                LedgerError::UnknownUser(_) => "UnknownUser",
                LedgerError::DuplicateModule(_) => "DuplicateModule",
                LedgerError::EmptyTitle => "EmptyTitle",
                LedgerError::KindMismatch(_) => "KindMismatch",
                LedgerError::UnrelatedHistories { .. } => "UnrelatedHistories",
            },
            ServiceError::Session(e) => match e {
                SessionError::ValidationErrorsPresent(_) => "ValidationErrorsPresent",
                SessionError::SessionNotActive(_) => "SessionNotActive",
                SessionError::WrongNode { .. } => "WrongNode",
                SessionError::InvalidOutcome(_) => "InvalidOutcome",
                _ => "SessionError",
            },
            ServiceError::Scheduler(_) => "GradeOutOfRange",
            ServiceError::Chat(e) => match e {
                ChatError::UnknownTemplate(_) => "UnknownTemplate",
                ChatError::UnresolvedSlot(_) => "UnresolvedSlot",
                ChatError::UnknownLocale(_) => "UnknownLocale",
            },
            ServiceError::Package(_) => "InvalidPackage",
            ServiceError::Export(ExportError::ExportBlocked { .. }) => "ExportBlocked",
            ServiceError::Export(_) => "ExportFailed",
            ServiceError::BadRequest(_) => "BadRequest",
            ServiceError::Storage(_) => "StorageFailure",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::LogonIdTaken(_) | ServiceError::VersionConflict { .. } => StatusCode::CONFLICT,
            ServiceError::BadCredentials | ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Forbidden(_) => StatusCode::FORBIDDEN,
            ServiceError::NotFound(_) | ServiceError::UnknownTarget(_) => StatusCode::NOT_FOUND,
            ServiceError::Ledger(
                LedgerError::UnknownModule(_)
                | LedgerError::UnknownComposition(_)
                | LedgerError::UnknownContent(_)
                | LedgerError::UnknownUser(_),
            ) => StatusCode::NOT_FOUND,
            ServiceError::Ledger(LedgerError::DuplicateModule(_)) => StatusCode::CONFLICT,
            ServiceError::Session(SessionError::UnknownComposition(_)) => StatusCode::NOT_FOUND,
            ServiceError::Session(SessionError::SessionNotActive(_) | SessionError::WrongNode { .. }) => {
                StatusCode::CONFLICT
            }
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    fn details(&self) -> Value {
        match self {
            ServiceError::InvalidCondition(d) => json!(d),
            ServiceError::ValidationErrors(report)
            | ServiceError::Session(SessionError::ValidationErrorsPresent(report))
            | ServiceError::Export(ExportError::ExportBlocked { report, .. }) => json!(report),
            ServiceError::VersionConflict { expected, current } => {
                json!({"expected": expected, "current": current})
            }
            ServiceError::Package(
                H5pError::MalformedManifest { file, diagnostics }
                | H5pError::SemanticsViolation { file, diagnostics },
            ) => json!({"file": file, "diagnostics": diagnostics.iter().map(|d| json!({"path": d.path, "message": d.message})).collect::<Vec<_>>()}),
            _ => Value::Null,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = json!({
            "error": self.code(),
            "message": self.to_string(),
            "details": self.details(),
        });
        (self.status(), Json(body)).into_response()
    }
}
