use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::sphere::CriticalPointRecord;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid tolerance, step, or other configuration value.
    Config(String),
    /// A field produced a non-finite value.
    Evaluation(String),
    /// Quadrature did not reach its tolerance within the refinement budget.
    Quadrature { value: f64, previous: f64, gap: f64 },
    /// A chart was asked to map its excluded pole.
    Pole,
    /// The Green kernel was evaluated on the diagonal.
    Singularity,
    /// A calibrated identity failed its residual certificate.
    Convention { what: String, residual: f64 },
    /// Degenerate critical point or vanishing margin.
    C0Violation { reason: String, record: Option<Box<CriticalPointRecord>> },
    /// An interaction matrix with (numerically) zero least eigenvalue.
    C1Violation { labels: Vec<String>, rho: f64 },
    /// A documented precondition of an operation does not hold.
    Precondition(String),
    /// Two routes that must agree did not.
    Consistency(String),
    /// A required intersection number is missing.
    IncompleteMu { labels: Vec<String>, k: u32 },
    /// Too many points to enumerate.
    CapExceeded { count: usize, cap: usize },
    /// Step-size underflow in the flow integrator.
    Integration(String),
    /// Malformed input data.
    Input(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Evaluation(m) => write!(f, "evaluation error: {m}"),
            Error::Quadrature { value, previous, gap } => write!(
                f,
                "quadrature did not converge: last {value:e}, previous {previous:e}, relative gap {gap:e}"
            ),
            Error::Pole => write!(f, "point lies on the excluded chart pole"),
            Error::Singularity => write!(f, "Green kernel evaluated on the diagonal"),
            Error::Convention { what, residual } => {
                write!(f, "convention check failed for {what}: residual {residual:e}")
            }
            Error::C0Violation { reason, .. } => write!(f, "(C0) violated: {reason}"),
            Error::C1Violation { labels, rho } => {
                write!(f, "(C1) violated: least eigenvalue {rho:e} for tuple {labels:?}")
            }
            Error::Precondition(m) => write!(f, "precondition failed: {m}"),
            Error::Consistency(m) => write!(f, "internal consistency failure: {m}"),
            Error::IncompleteMu { labels, k } => {
                write!(f, "missing intersection number for tuple {labels:?} at k = {k}")
            }
            Error::CapExceeded { count, cap } => {
                write!(f, "{count} points exceed the enumeration cap of {cap}")
            }
            Error::Integration(m) => write!(f, "integration error: {m}"),
            Error::Input(m) => write!(f, "input error: {m}"),
        }
    }
}

impl core::error::Error for Error {}
