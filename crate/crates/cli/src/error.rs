//! Exit statuses and the machine-readable error line.

use std::fmt;
use std::process::ExitCode;

use jflow_core::snapshot::SnapshotError;
use jflow_core::{FlowError, ModelError, OracleError};
use serde::Serialize;

use crate::config::ConfigError;
use crate::series::SeriesError;

/// Stable exit statuses: 0 ok, then one per category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Usage,
    Validation,
    HypothesisViolation,
    NumericalFailure,
    NonConvergence,
}

impl Category {
    pub fn code(self) -> u8 {
        match self {
            Category::Usage => 1,
            Category::Validation => 2,
            Category::HypothesisViolation => 3,
            Category::NumericalFailure => 4,
            Category::NonConvergence => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Validation => "validation",
            Category::HypothesisViolation => "hypothesis_violation",
            Category::NumericalFailure => "numerical_failure",
            Category::NonConvergence => "non_convergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self { category, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Category::Usage, message)
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.category.code())
    }

    /// `{"error": "...", "exit_code": n, "message": "..."}`
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.category.name(),
            "exit_code": self.category.code(),
            "message": self.message,
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.category.name(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        let category = match e {
            ConfigError::Read { .. } => Category::Usage,
            ConfigError::Parse(_) | ConfigError::Invalid(_) => Category::Validation,
        };
        Self::new(category, e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let category = match e {
            ModelError::Grid(_) | ModelError::BackgroundNotPositive => Category::Validation,
            ModelError::ReferenceNotPositive { .. }
            | ModelError::NonPositiveVolume { .. }
            | ModelError::NonPositiveC { .. }
            | ModelError::HypothesisViolation { .. } => Category::HypothesisViolation,
        };
        Self::new(category, e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        let category = match e {
            FlowError::InvalidConfig(_) => Category::Validation,
            FlowError::NotNormalized | FlowError::PositivityLost { .. } => Category::NumericalFailure,
        };
        Self::new(category, e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        let category = match e {
            OracleError::HypothesisViolation { .. } | OracleError::NonPositiveTarget { .. } => {
                Category::HypothesisViolation
            }
            OracleError::NonConvergence { .. } => Category::NonConvergence,
            OracleError::PositivityUnrecoverable { .. }
            | OracleError::Inconsistent { .. }
            | OracleError::NotPositive { .. } => Category::NumericalFailure,
            OracleError::Grid(_) => Category::Usage,
        };
        Self::new(category, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<SnapshotError> for CliError {
    fn from(e: SnapshotError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        Self::usage(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_stable() {
        let all = [
            Category::Usage,
            Category::Validation,
            Category::HypothesisViolation,
            Category::NumericalFailure,
            Category::NonConvergence,
        ];
        assert_eq!(all.map(Category::code), [1, 2, 3, 4, 5]);
    }

    #[test]
    fn json_line_is_machine_readable() {
        let e = CliError::from(ModelError::HypothesisViolation { index: Some(3), min_eigenvalue: -0.1 });
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"], "hypothesis_violation");
        assert_eq!(v["exit_code"], 3);
    }
}
