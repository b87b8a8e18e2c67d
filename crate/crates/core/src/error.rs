use thiserror::Error;

/// Errors raised by the numerical and simulation routines.
///
/// Variants split into two families: misuse of an operation (a violated
/// precondition) and numerical failure (a method that did not converge to
/// the requested tolerance). [`Error::is_numerical`] tells them apart.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("pole proximity: {0}")]
    Pole(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("state space of {states} configurations exceeds the cap of {cap}")]
    StateSpaceTooLarge { states: usize, cap: usize },

    #[error("no convergence in {what}: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error("non-negligible imaginary residue {residue:e} (tolerance {tolerance:e})")]
    ImaginaryResidue { residue: f64, tolerance: f64 },
}

impl Error {
    /// True for failures of a numerical method, as opposed to misuse.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::ImaginaryResidue { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
