//! The H5P container format: reading, checking, writing and exporting
//! compositions as packages.

mod archive;
mod export;
mod package;
mod semantics;

use std::fmt;

use thiserror::Error;

pub use archive::{check_package, read_package, write_package};
pub use export::{
    export_composition, extract_composition, player_library, ExportError, ExportedPackage,
    PLAYER_MACHINE_NAME,
};
pub use package::{H5pManifest, H5pPackage, LibraryDefinition, LibraryRef};
pub use semantics::{
    check_semantics, parse_semantics, semantics_to_json, validate_content, validate_content_with,
    ContentDiagnostic, ContentIssue, FieldDetail, FieldType, LibraryLookup, SelectOption,
    SemanticsField,
};

/// A problem located at a path, e.g. a JSON pointer or a field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn join(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(Diagnostic::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Errors reading a package or refusing to write one. Every variant names
/// the archive entry at fault.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum H5pError {
    #[error("not a zip archive: {0}")]
    NotAnArchive(String),
    #[error("archive has no h5p.json")]
    MissingManifest,
    #[error("{file}: {}", join(.diagnostics))]
    MalformedManifest {
        file: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("{file}: dependency {dependency} is not in the package")]
    DanglingDependency { file: String, dependency: LibraryRef },
    #[error("{file}: {}", join(.diagnostics))]
    SemanticsViolation {
        file: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("unsafe archive path {0:?}")]
    UnsafePath(String),
}
