// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range. `name` is the parameter
    /// as it appears on the command line, so the CLI can report it directly.
    #[error("invalid {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("transfer function evaluated within {guard:e} of its singular point {point}")]
    Singularity { point: &'static str, guard: f64 },

    #[error("quadrature did not converge for tap t={tap}: error estimate {estimate:e} after {intervals} intervals (tolerance {tolerance:e})")]
    Convergence {
        tap: i64,
        estimate: f64,
        intervals: usize,
        tolerance: f64,
    },

    #[error("imaginary residual {residual:e} exceeds {limit:e}; the transfer function is not conjugate-symmetric")]
    ImaginaryResidual { residual: f64, limit: f64 },

    #[error("tap window [{first}, {first}+{len}) does not cover lags 0..{needed}")]
    TapWindow {
        first: i64,
        len: usize,
        needed: usize,
    },

    #[error("degenerate sequence in trial {trial}: regressor variance below threshold")]
    Degenerate { trial: u64 },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }

    /// Module that raised the error, used in CLI diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "validation",
            Error::Singularity { .. } | Error::NonFinite(_) => "transfer",
            Error::Convergence { .. } | Error::ImaginaryResidual { .. } => "kernel",
            Error::TapWindow { .. } | Error::Degenerate { .. } => "predictors",
        }
    }
}
