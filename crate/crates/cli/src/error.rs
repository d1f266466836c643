use std::fmt;

use esa_core::evaluation::EvalError;
use esa_core::kg_store::KgError;
use esa_core::model::ModelError;
use esa_core::supervision::SupervisionError;
use esa_core::transe::TransEError;

/// A failure reported as one `E_*` line. Input and usage problems exit
/// with 2, everything else with 1.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn missing(path: &std::path::Path) -> Self {
        Self::new(
            "E_MISSING_INPUT",
            format!("{} does not exist", path.display()),
        )
    }

    pub fn bad_input(message: impl Into<String>) -> Self {
        Self::new("E_BAD_INPUT", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new("E_INTERNAL", message)
    }

    pub fn exit_code(&self) -> u8 {
        match self.code {
            "E_INTERNAL" | "E_IO" => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message.replace('\n', " "))
    }
}

impl From<KgError> for CliError {
    fn from(e: KgError) -> Self {
        match e {
            KgError::MissingFile(_) => Self::new("E_MISSING_INPUT", e.to_string()),
            KgError::Io(_) => Self::new("E_IO", e.to_string()),
            KgError::GoldTripleNotInDescription { .. } => {
                Self::new("E_CORRUPT_BENCHMARK", e.to_string())
            }
            _ => Self::bad_input(e.to_string()),
        }
    }
}

impl From<TransEError> for CliError {
    fn from(e: TransEError) -> Self {
        match e {
            TransEError::InvalidConfig(_) => Self::new("E_USAGE", e.to_string()),
            _ => Self::bad_input(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::KTooLarge { .. } => Self::new("E_K_TOO_LARGE", e.to_string()),
            ModelError::DimensionMismatch(_) => Self::new("E_INCOMPATIBLE", e.to_string()),
            ModelError::Checkpoint(_) => Self::bad_input(e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}

impl From<SupervisionError> for CliError {
    fn from(e: SupervisionError) -> Self {
        Self::new("E_CORRUPT_BENCHMARK", e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            EvalError::Data(d) => d.into(),
            EvalError::Supervision(s) => s.into(),
            EvalError::UnknownEntity(_) => Self::new("E_UNKNOWN_ENTITY", e.to_string()),
            EvalError::UnsupportedK(_) => Self::new("E_USAGE", e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
