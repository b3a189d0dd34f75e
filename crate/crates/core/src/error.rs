use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// The transformation could not be resolved within the configured stage
    /// depth. This is a first-class outcome for limit-defined maps, not a bug.
    #[error("transformation undefined within depth cap {depth_cap}")]
    UndefinedAtDepth { depth_cap: usize },

    /// A point lies outside the space the system is defined on.
    #[error("point outside the system's space: {0}")]
    OutsideSpace(String),

    /// Two points that must belong to the same space do not.
    #[error("incompatible points: {0}")]
    IncompatiblePoints(String),

    /// A construction specification failed validation.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A parameter is out of the supported range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested operation is not available for this system kind.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Construction exceeded the configured space or size budget.
    #[error("construction budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Configuration file problems (unknown keys, malformed rationals, ...).
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
