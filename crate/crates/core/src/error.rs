use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of a function.
    Domain {
        op: &'static str,
        arg: &'static str,
        value: f64,
    },
    /// A model parameter violates its invariant.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// Two endpoints coincide where a positive distance is required.
    DegenerateDistance,
    /// An iterative routine stopped before reaching its tolerance.
    NonConvergence {
        op: &'static str,
        estimate: f64,
        error: f64,
    },
    /// The closed-form composite CDF needs `2 * m` to be an integer.
    NonHalfIntegerShape { m: f64 },
    /// The SIC decoding constraint fails at rank `j` (1-based).
    Infeasible { j: usize },
    /// Rank outside `1..=total` or a decode rank above the receiver rank.
    Rank { rank: usize, total: usize },
    /// Progressive grid search produced no candidate at the coarsest resolution.
    NoFeasibleAllocation,
    /// Candidate evaluation was asked to pick from an empty set.
    EmptyCandidates,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { op, arg, value } => {
                write!(f, "{op}: argument `{arg}` = {value} is outside the domain")
            }
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::DegenerateDistance => write!(f, "endpoints coincide (zero distance)"),
            Error::NonConvergence { op, estimate, error } => write!(
                f,
                "{op} did not converge (estimate {estimate}, error estimate {error})"
            ),
            Error::NonHalfIntegerShape { m } => {
                write!(f, "shape m = {m} is not a half-integer")
            }
            Error::Infeasible { j } => write!(
                f,
                "power allocation violates the SIC feasibility constraint at rank {j}"
            ),
            Error::Rank { rank, total } => write!(f, "rank {rank} is invalid for {total} users"),
            Error::NoFeasibleAllocation => {
                write!(f, "no feasible power allocation at the initial grid resolution")
            }
            Error::EmptyCandidates => write!(f, "empty candidate set"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub(crate) fn domain(op: &'static str, arg: &'static str, value: f64) -> Error {
    Error::Domain { op, arg, value }
}
