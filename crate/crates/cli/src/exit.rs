use std::process::ExitCode;

/// Successful outcome of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Accept,
    Reject,
}

impl Status {
    pub fn from_accepted(accepted: bool) -> Self {
        if accepted {
            Status::Accept
        } else {
            Status::Reject
        }
    }

    pub fn code(self) -> ExitCode {
        match self {
            Status::Accept => ExitCode::SUCCESS,
            Status::Reject => ExitCode::from(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Bad arguments, configuration or input content: exit 2.
    Usage,
    /// File system failure: exit 3.
    Io,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: FailureKind::Usage,
            error: error.into(),
        }
    }

    pub fn io(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: FailureKind::Io,
            error: error.into(),
        }
    }

    pub fn code(&self) -> ExitCode {
        match self.kind {
            FailureKind::Usage => ExitCode::from(2),
            FailureKind::Io => ExitCode::from(3),
        }
    }
}

pub trait OrUsage<T> {
    fn or_usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrUsage<T> for Result<T, E> {
    fn or_usage(self) -> Result<T, Failure> {
        self.map_err(Failure::usage)
    }
}
