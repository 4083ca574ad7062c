use std::fmt::Display;
use std::process::ExitCode;

use concept_cover_core::IngestError;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;
pub const EXIT_PARTIAL: u8 = 4;

/// Successful run, possibly with per-record errors in its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    Partial,
}

impl Status {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Status::Complete => ExitCode::SUCCESS,
            Status::Partial => ExitCode::from(EXIT_PARTIAL),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad input: malformed files, inconsistent manifests, bad flags.
    Validation,
    /// Environment trouble: I/O, thread pool.
    Runtime,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn validation(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind: Kind::Validation,
            error: error.into(),
        }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind: Kind::Runtime,
            error: error.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self.kind {
            Kind::Validation => EXIT_VALIDATION,
            Kind::Runtime => EXIT_RUNTIME,
        })
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        if e.is_validation() {
            Failure::validation(e)
        } else {
            Failure::runtime(e)
        }
    }
}

pub trait Classify<T> {
    fn invalid(self, context: impl Display + Send + Sync + 'static) -> Result<T, Failure>;
    fn runtime(self, context: impl Display + Send + Sync + 'static) -> Result<T, Failure>;
}

impl<T, E> Classify<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn invalid(self, context: impl Display + Send + Sync + 'static) -> Result<T, Failure> {
        self.map_err(|e| Failure::validation(e.into().context(context)))
    }

    fn runtime(self, context: impl Display + Send + Sync + 'static) -> Result<T, Failure> {
        self.map_err(|e| Failure::runtime(e.into().context(context)))
    }
}
