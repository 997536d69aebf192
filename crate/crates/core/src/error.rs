use core::fmt;

/// Errors reported by the control library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor or operation received a parameter violating its
    /// documented invariant.
    InvalidParameter(&'static str),
    /// The integrator produced a non-finite state component.
    NonFiniteState { t: f64 },
    /// An envelope sample or functional input was not finite.
    NonFiniteSample,
    /// Two objects that must share a time grid do not.
    GridMismatch,
    /// The shooting bracket contains no sign change (window too narrow or
    /// incompatible boundary values).
    ShootingBracket,
    /// More eigenstates requested than the potential binds.
    TooManyStates { requested: usize, bound: usize },
    /// An all-zero envelope where a nonzero one is required.
    ZeroEnvelope,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::NonFiniteState { t } => {
                write!(f, "integration failure: non-finite state at t = {t}")
            }
            Error::NonFiniteSample => write!(f, "non-finite envelope sample"),
            Error::GridMismatch => write!(f, "time grid mismatch"),
            Error::ShootingBracket => write!(f, "shooting bracket contains no sign change"),
            Error::TooManyStates { requested, bound } => {
                write!(f, "{requested} eigenstates requested but only {bound} are bound")
            }
            Error::ZeroEnvelope => write!(f, "envelope is identically zero"),
        }
    }
}

impl core::error::Error for Error {}
