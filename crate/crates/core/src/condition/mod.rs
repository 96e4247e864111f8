//! The flow-condition language: a small, total boolean language over the
//! outcome of the node an edge leaves.

mod ast;
mod eval;
mod lexer;
mod parser;
mod printer;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{Comparator, Comparison, Condition, Metric};
pub use eval::evaluate;
pub use parser::parse;
pub use printer::print;

/// Maximum tree depth of a condition.
pub const MAX_DEPTH: usize = 32;
/// Maximum length of condition source text, in characters.
pub const MAX_SOURCE_LEN: usize = 4096;

/// A lexical or syntax error with its 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Option<String>,
}

impl ParseDiagnostic {
    pub(crate) fn new(
        line: usize,
        column: usize,
        message: impl Into<String>,
        expected: Option<&str>,
    ) -> Self {
        ParseDiagnostic {
            line,
            column,
            message: message.into(),
            expected: expected.map(str::to_owned),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if let Some(expected) = &self.expected {
            write!(f, " (expected {expected})")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseDiagnostic {}
