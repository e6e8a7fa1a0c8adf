//! Exit-code contract: 0 success, 1 check or convergence failure, 2 input
//! error, 3 numerical failure.

use std::fmt;

use covham::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Failure,
    Input,
    Numerical,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Failure => 1,
            ExitKind::Input => 2,
            ExitKind::Numerical => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Input,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Numerical,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Failure,
            message: message.into(),
        }
    }

    pub fn code(&self) -> i32 {
        self.kind.code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Classifies a core error raised while evaluating a loaded scenario.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::Coordinates(_)
            | Error::Dimension { .. }
            | Error::Settings(_)
            | Error::SkewViolation { .. } => ExitKind::Input,
            Error::SingularJacobian { .. } | Error::NoConvergence { .. } | Error::DegenerateStructure { .. } => {
                ExitKind::Failure
            }
            Error::Domain(_) | Error::OrderUnavailable(_) | Error::Metric(_) | Error::BlowUp { .. } => {
                ExitKind::Numerical
            }
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}
