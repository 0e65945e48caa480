use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One itemized problem found while validating a scenario.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl FieldError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("filter does not overlap the spectral grid: {0}")]
    Coverage(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid gaussian coefficients: {0}")]
    InvalidGaussian(String),
    #[error("no closed form for filter shape: {0}")]
    UnsupportedShape(String),
    #[error("invalid scenario:\n{}", format_fields(.0))]
    Scenario(Vec<FieldError>),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_fields(errors: &[FieldError]) -> String {
    errors.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n")
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_error_lists_every_field() {
        let e = Error::Scenario(vec![
            FieldError::new("sweep.axes[0].values", "empty grid"),
            FieldError::new("source.pm_sigma", "must be positive"),
        ]);
        let s = e.to_string();
        assert!(s.contains("sweep.axes[0].values: empty grid"));
        assert!(s.contains("source.pm_sigma: must be positive"));
    }
}
