use alloc::string::String;
use core::fmt;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A coefficient table violated one of its structural invariants.
    TableInvariant(String),
    /// An entry that should have stabilized changed between consecutive steps.
    Stabilization { i: u32, j: u32, k: u32 },
    /// A limit coefficient needed downstream was not available at the chosen step.
    MissingLimit { i: u32, j: u32 },
    /// A parameter was outside its admissible range.
    InvalidParameter(String),
    /// A series did not reach the requested tolerance within the term budget.
    NonConvergence { terms: usize },
    /// Requested evaluation at a point where a leading coefficient vanishes.
    SingularPoint { y: f64 },
    /// The adaptive integrator could not make progress.
    StepUnderflow { y: f64, h: f64 },
    /// The integrator hit its step budget.
    TooManySteps { y: f64 },
    /// Evaluation outside the interval covered by a dense solution.
    OutOfDomain { y: f64, lo: f64, hi: f64 },
    /// Adaptive quadrature exhausted its subdivision budget.
    Quadrature { a: f64, b: f64, error: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::TableInvariant(msg) => write!(f, "coefficient table invariant violated: {msg}"),
            Error::Stabilization { i, j, k } => {
                write!(f, "coefficient ({i},{j}) changed between steps {} and {k}", k - 1)
            }
            Error::MissingLimit { i, j } => write!(f, "limit coefficient ({i},{j}) not available"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NonConvergence { terms } => {
                write!(f, "series did not converge within {terms} terms")
            }
            Error::SingularPoint { y } => write!(f, "singular point at y = {y}"),
            Error::StepUnderflow { y, h } => write!(f, "step size underflow at y = {y} (h = {h:e})"),
            Error::TooManySteps { y } => write!(f, "step budget exhausted at y = {y}"),
            Error::OutOfDomain { y, lo, hi } => {
                write!(f, "y = {y} outside solution domain [{lo}, {hi}]")
            }
            Error::Quadrature { a, b, error } => {
                write!(f, "quadrature on [{a}, {b}] stalled with error estimate {error:e}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
