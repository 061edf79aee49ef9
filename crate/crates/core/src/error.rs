use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a time integration stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbortCause {
    /// A NaN or infinity showed up in the state or a tendency.
    NonFinite,
    /// The admissible step collapsed below the minimum step size.
    StepCollapse,
}

impl fmt::Display for AbortCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortCause::NonFinite => f.write_str("non-finite state"),
            AbortCause::StepCollapse => f.write_str("time step collapsed"),
        }
    }
}

/// Payload attached to a numerical abort.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Abort {
    pub cause: AbortCause,
    pub t: f64,
    pub max_speed: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),

    #[error("{what} has a nonzero mean mode ({magnitude:e})")]
    MeanMode { what: &'static str, magnitude: f64 },

    #[error("numerical abort at t = {}: {} (max |u|+|b| = {:e})", .0.t, .0.cause, .0.max_speed)]
    Numerical(Abort),

    #[error("property violation: {0}")]
    Property(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::NonFiniteInput(_) | Error::MeanMode { .. } => 2,
            Error::Numerical(_) => 3,
            Error::Property(_) => 4,
            Error::Checkpoint(_) | Error::Io(_) => 5,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
