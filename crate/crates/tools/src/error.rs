use std::fmt;

/// Errors raised by the file formats, the CLI and the validation harness.
#[derive(Debug)]
pub enum ToolError {
    Core(bs5_core::Error),
    Io(std::io::Error),
    Csv(csv::Error),
    Json(serde_json::Error),
    Parse(String),
    Usage(String),
}

impl fmt::Display for ToolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ToolError::Core(e) => write!(f, "{e}"),
            ToolError::Io(e) => write!(f, "I/O error: {e}"),
            ToolError::Csv(e) => write!(f, "CSV error: {e}"),
            ToolError::Json(e) => write!(f, "JSON error: {e}"),
            ToolError::Parse(m) => write!(f, "parse error: {m}"),
            ToolError::Usage(m) => write!(f, "usage error: {m}"),
        }
    }
}

impl std::error::Error for ToolError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ToolError::Core(e) => Some(e),
            ToolError::Io(e) => Some(e),
            ToolError::Csv(e) => Some(e),
            ToolError::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<bs5_core::Error> for ToolError {
    fn from(e: bs5_core::Error) -> Self {
        ToolError::Core(e)
    }
}

impl From<std::io::Error> for ToolError {
    fn from(e: std::io::Error) -> Self {
        ToolError::Io(e)
    }
}

impl From<csv::Error> for ToolError {
    fn from(e: csv::Error) -> Self {
        ToolError::Csv(e)
    }
}

impl From<serde_json::Error> for ToolError {
    fn from(e: serde_json::Error) -> Self {
        ToolError::Json(e)
    }
}

pub type Result<T> = std::result::Result<T, ToolError>;
