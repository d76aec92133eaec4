use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture `{arch}`: {reason}")]
    InvalidArchitecture { arch: String, reason: String },

    #[error("config parse error{}: {message}", location.map(|(l, c)| format!(" at line {l}, column {c}")).unwrap_or_default())]
    Config {
        message: String,
        /// 1-based (line, column) of the offending token, when known.
        location: Option<(usize, usize)>,
    },

    #[error("performance unattainable: t_constraint {t_constraint_ns:.3} ns is below the fastest feasible placement")]
    Unattainable { t_constraint_ns: f64 },

    #[error("time grid too large: {cells} DP cells exceeds the limit of {limit}")]
    GridOverflow { cells: u128, limit: u128 },

    #[error("DP tables were built on different grids ({0})")]
    GridMismatch(String),

    #[error("placement counts do not match: {0}")]
    CountMismatch(String),

    #[error("slice overrun: overheads of {overhead_ns:.1} ns leave no time in a {slice_ns:.1} ns slice")]
    SliceOverrun { overhead_ns: f64, slice_ns: f64 },

    #[error("instance too large for exhaustive search: {compositions} compositions (limit {limit})")]
    InstanceTooLarge { compositions: u128, limit: u128 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("unknown model profile `{0}`")]
    UnknownModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
