//! Crate-wide error type.
//!
//! Numerical routines report failure through [`Error`]; panics are reserved
//! for violated internal invariants (indexing bugs, broken preconditions of
//! private helpers). Several variants are *expected* outcomes rather than
//! faults: `NoConvergence` on supercritical data, `BlowupDetected` from the
//! explicit stepper, `NotInSpace` from norm evaluation on too-singular data.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside a function's domain.
    Domain { what: &'static str, value: f64 },
    /// exp(s^2) is not representable: |s| exceeds the overflow clamp.
    RangeOverflow { value: f64 },
    /// Adaptive quadrature could not meet the requested tolerance.
    QuadratureFailure { requested: f64, achieved: f64 },
    /// The outer profile never crossed zero before the search cap.
    NoZeroFound { r_max: f64 },
    /// The defining integral of the Orlicz class diverges for every scale,
    /// so the field has no finite Luxemburg norm.
    NotInSpace,
    /// A fixed-point iteration exhausted its sweep budget.
    NoConvergence {
        iterations: usize,
        last_distance: f64,
    },
    /// The stepper state crossed the configured ceiling. A diagnostic of
    /// runaway growth, not a proof of blow-up.
    BlowupDetected { t: f64, sup: f64 },
    /// A monotone iterate fell below its predecessor beyond slack.
    MonotonicityViolation { t: f64, r: f64, gap: f64 },
    /// An iterate exceeded its supersolution ceiling beyond slack.
    CeilingViolation { t: f64, r: f64, excess: f64 },
    /// The kernel mass factor is non-positive, so the lower bound is empty.
    VacuousBound { t: f64 },
    /// A run option or configuration entry is unusable.
    InvalidParameter { what: &'static str, detail: String },
    /// Reading or writing a report file failed.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => {
                write!(f, "domain error: {what} (got {value:e})")
            }
            Error::RangeOverflow { value } => {
                write!(f, "range overflow: exp({value:e}^2) exceeds f64")
            }
            Error::QuadratureFailure {
                requested,
                achieved,
            } => write!(
                f,
                "quadrature failure: requested tolerance {requested:e}, achieved {achieved:e}"
            ),
            Error::NoZeroFound { r_max } => {
                write!(f, "no zero of the outer profile found below r = {r_max}")
            }
            Error::NotInSpace => {
                write!(f, "field is outside the Orlicz class: norm integral diverges at every scale")
            }
            Error::NoConvergence {
                iterations,
                last_distance,
            } => write!(
                f,
                "no convergence after {iterations} sweeps (last distance {last_distance:e})"
            ),
            Error::BlowupDetected { t, sup } => {
                write!(f, "blow-up ceiling crossed at t = {t:e} (sup = {sup:e})")
            }
            Error::MonotonicityViolation { t, r, gap } => write!(
                f,
                "monotonicity violation at (t, r) = ({t:e}, {r:e}), gap {gap:e}"
            ),
            Error::CeilingViolation { t, r, excess } => write!(
                f,
                "ceiling violation at (t, r) = ({t:e}, {r:e}), excess {excess:e}"
            ),
            Error::VacuousBound { t } => {
                write!(f, "kernel mass factor non-positive at t = {t:e}: bound is vacuous")
            }
            Error::InvalidParameter { what, detail } => {
                write!(f, "invalid parameter {what}: {detail}")
            }
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
