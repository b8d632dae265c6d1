use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// The variants are grouped into the three classes the command line maps to
/// exit codes: parameter problems, protocol problems, and transport problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("peer token contains a zero entry; the round must be restarted")]
    RestartRequired,

    #[error("degenerate setup: {0} consecutive token draws contained a zero entry")]
    DegenerateSetup(u32),

    #[error("malformed frame: {0}")]
    Frame(String),

    #[error("peer reported an error: {0}")]
    Peer(String),

    #[error("transport error: {0}")]
    Transport(#[from] io::Error),

    #[error("timed out waiting for peer: {0}")]
    Timeout(String),
}

/// Coarse error class, used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parameter,
    Protocol,
    Transport,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Parameter => 2,
            ErrorClass::Protocol => 3,
            ErrorClass::Transport => 4,
        }
    }
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parameter(_) | Error::Serialization(_) => ErrorClass::Parameter,
            Error::Protocol(_)
            | Error::RestartRequired
            | Error::DegenerateSetup(_)
            | Error::Frame(_)
            | Error::Peer(_) => ErrorClass::Protocol,
            Error::Transport(_) | Error::Timeout(_) => ErrorClass::Transport,
        }
    }
}
