//! Error taxonomy shared across the crate.

use thiserror::Error;

/// Observables from the step that triggered a numerical failure.
#[derive(Debug, Clone, Default)]
pub struct StepTelemetry {
    pub phase: String,
    pub step: u64,
    pub loss_d: f64,
    pub loss_e_or_g: f64,
    pub d_real_mean: f64,
    pub d_fake_mean: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A required dataset or file is unavailable.
    #[error("resource unavailable: {0}")]
    Resource(String),

    /// An operation was called in a state that cannot serve it.
    #[error("state error: {0}")]
    State(String),

    /// Training produced a non-finite value; aborts the run.
    #[error("numerical failure: {message} (phase {}, step {})", .telemetry.phase, .telemetry.step)]
    Numerical {
        message: String,
        telemetry: StepTelemetry,
    },

    /// A frozen-parameter or warm-start contract was broken; aborts the run.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A pipeline stage ran before the stage it depends on.
    #[error("missing prerequisite: {0}")]
    MissingPrerequisite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Stamp phase/step onto a numerical failure bubbling up from a loss
    /// evaluation; other variants pass through unchanged.
    pub fn with_phase(self, phase: &str, step: u64) -> Self {
        match self {
            Error::Numerical {
                message,
                mut telemetry,
            } => {
                telemetry.phase = phase.to_string();
                telemetry.step = step;
                Error::Numerical { message, telemetry }
            }
            other => other,
        }
    }

    /// Process exit code for the CLI: 2 usage, 3 missing prerequisite,
    /// 4 numerical failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => 2,
            Error::MissingPrerequisite(_) => 3,
            Error::Numerical { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
