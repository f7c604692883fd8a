use std::fmt;

use ortk_core::Error;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Invalid = 1,
    Io = 2,
    Internal = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Invalid, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Io, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Internal, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::io(e.to_string())
        } else {
            Failure::invalid(e.to_string())
        }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;
