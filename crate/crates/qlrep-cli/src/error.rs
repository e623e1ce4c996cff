//! CLI error type with stable exit codes.
//!
//! Exit 2 means the input could not be understood (bad files, bad JSON,
//! bad flags), exit 3 means the input was understood but the operation's
//! preconditions do not hold, and exit 4 means a numeric guarantee failed.

use std::process::ExitCode;

use qlrep::bell::BellError;
use qlrep::flybox::SimError;
use qlrep::frequency::FrequencyError;
use qlrep::qlra::QlraError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrKind {
    Schema,
    Precondition,
    Numeric,
}

impl ErrKind {
    pub fn code(self) -> u8 {
        match self {
            ErrKind::Schema => 2,
            ErrKind::Precondition => 3,
            ErrKind::Numeric => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub stage: String,
    pub kind: ErrKind,
    pub message: String,
}

impl CliError {
    pub fn schema(stage: &str, message: impl ToString) -> Self {
        CliError {
            stage: stage.to_string(),
            kind: ErrKind::Schema,
            message: message.to_string(),
        }
    }

    pub fn precondition(stage: &str, message: impl ToString) -> Self {
        CliError {
            stage: stage.to_string(),
            kind: ErrKind::Precondition,
            message: message.to_string(),
        }
    }

    pub fn numeric(stage: &str, message: impl ToString) -> Self {
        CliError {
            stage: stage.to_string(),
            kind: ErrKind::Numeric,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.code())
    }

    /// One-line JSON rendering for stderr.
    pub fn render(&self) -> String {
        serde_json::json!({
            "stage": self.stage,
            "code": self.kind.code(),
            "message": self.message,
        })
        .to_string()
    }
}

pub fn from_io(stage: &str, err: std::io::Error) -> CliError {
    CliError::schema(stage, err)
}

pub fn from_json(stage: &str, err: serde_json::Error) -> CliError {
    CliError::schema(stage, err)
}

pub fn from_sim(stage: &str, err: SimError) -> CliError {
    CliError::precondition(stage, err)
}

pub fn from_bell(stage: &str, err: BellError) -> CliError {
    CliError::precondition(stage, err)
}

/// Phase inconsistency is a failed numeric guarantee on otherwise valid
/// data; every other reconstruction error is a precondition failure.
pub fn from_qlra(stage: &str, err: QlraError) -> CliError {
    let kind = match err {
        QlraError::PhaseInconsistency(_) => ErrKind::Numeric,
        _ => ErrKind::Precondition,
    };
    CliError {
        stage: stage.to_string(),
        kind,
        message: err.to_string(),
    }
}

/// Malformed sequence files are schema errors; windows that do not fit
/// the data are precondition failures.
pub fn from_frequency(stage: &str, err: FrequencyError) -> CliError {
    let kind = match err {
        FrequencyError::OutOfRange { .. } | FrequencyError::InsufficientData { .. } => {
            ErrKind::Precondition
        }
        _ => ErrKind::Schema,
    };
    CliError {
        stage: stage.to_string(),
        kind,
        message: err.to_string(),
    }
}
