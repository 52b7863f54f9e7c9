//! Violations, advisories and the contract errors raised while parsing agent
//! replies.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::ExtractError;
use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(code: impl Into<String>, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "[{}] {}", self.code, self.message)
        } else {
            write!(f, "[{}] {}: {}", self.code, self.path, self.message)
        }
    }
}

/// Outcome of a validator. Only `violations` block; advisories are kept
/// for the record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub advisories: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_passing(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&mut self, code: &str, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation::new(code, path, message));
    }

    pub fn advisory(&mut self, code: &str, path: impl Into<String>, message: impl Into<String>) {
        self.advisories.push(Violation::new(code, path, message));
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
        self.advisories.extend(other.advisories);
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

/// Why an agent reply does not satisfy its output contract.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ContractError {
    #[error(transparent)]
    Json(#[from] ExtractError),
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Vocabulary(#[from] ModelError),
    #[error("row index {row} at `{path}` is out of range for a table of {row_count} rows")]
    IndexOutOfRange { path: String, row: u64, row_count: usize },
    #[error("description is empty")]
    EmptyDescription,
}

impl ContractError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ContractError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ContractError::Json(ExtractError::NoJsonFound) => "no-json",
            ContractError::Json(ExtractError::MalformedJson { .. }) => "malformed-json",
            ContractError::Schema { .. } => "schema",
            ContractError::Vocabulary(ModelError::UnknownAnimation(_)) => "unknown-animation",
            ContractError::Vocabulary(ModelError::UnknownInsightType(_)) => "unknown-insight-type",
            ContractError::Vocabulary(ModelError::UnknownVisualizationType(_)) => "unknown-visualization-type",
            ContractError::Vocabulary(ModelError::UnknownAnnotationType(_)) => "unknown-annotation-type",
            ContractError::Vocabulary(_) => "model",
            ContractError::IndexOutOfRange { .. } => "index-out-of-range",
            ContractError::EmptyDescription => "empty-description",
        }
    }

    pub fn to_violation(&self) -> Violation {
        let path = match self {
            ContractError::Schema { path, .. } | ContractError::IndexOutOfRange { path, .. } => path.clone(),
            _ => String::new(),
        };
        Violation::new(self.code(), path, self.to_string())
    }
}
