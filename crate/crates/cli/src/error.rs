use quantune::{EstimatorError, GuaranteeError, HarnessError, SourceError};
use thiserror::Error;

/// Exit codes: 0 ok, 2 usage, 3 mathematical precondition, 4 data, 5 I/O.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Data(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<GuaranteeError> for CliError {
    fn from(e: GuaranteeError) -> Self {
        match e {
            GuaranteeError::Epsilon(_) | GuaranteeError::Rho(_) => CliError::Usage(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Empty | EstimatorError::NonFinite { .. } => CliError::Data(e.to_string()),
            EstimatorError::BetaWeight(_) => CliError::Usage(e.to_string()),
            EstimatorError::Index { .. } | EstimatorError::InsufficientSamples { .. } => {
                CliError::Precondition(e.to_string())
            }
        }
    }
}

impl From<SourceError> for CliError {
    fn from(e: SourceError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Guarantee(e) => e.into(),
            HarnessError::Source(e) => e.into(),
            HarnessError::Estimator(e) => e.into(),
            HarnessError::Plan(_) => CliError::Usage(e.to_string()),
            HarnessError::DatasetTooSmall { .. } => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}
