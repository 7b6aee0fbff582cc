use std::fmt::Display;

use framesel_core::Error;

/// Usage errors exit with 1, data errors with 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

pub type CmdResult<T = ()> = Result<T, Failure>;

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind: Kind::Usage,
            error: error.into(),
        }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind: Kind::Data,
            error: error.into(),
        }
    }

    pub fn context(self, msg: impl Display + Send + Sync + 'static) -> Self {
        Failure {
            kind: self.kind,
            error: self.error.context(msg),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Usage => 1,
            Kind::Data => 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) => Failure::usage(e),
            _ => Failure::data(e),
        }
    }
}

pub trait Context<T> {
    /// Marks the error as a data error and prefixes `msg`.
    fn data_context(self, msg: impl Display + Send + Sync + 'static) -> CmdResult<T>;
}

impl<T, E> Context<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn data_context(self, msg: impl Display + Send + Sync + 'static) -> CmdResult<T> {
        self.map_err(|e| Failure::data(e.into().context(msg)))
    }
}
