//! Crate-wide error type.

/// Errors reported by instance construction, file parsing, solvers, and
/// metric computations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value is outside the operation's domain
    /// (e.g. `n < 3`, a zero beam width, a negative bound).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Geometry that leaves a turning angle undefined: coincident
    /// consecutive points or duplicate instance points.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Text input that does not match the documented grammar. `line` is
    /// 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A candidate tour failed validation; the message lists every
    /// violation found.
    #[error("invalid tour: {0}")]
    InvalidTour(String),

    /// An exhaustive-enumeration guard was exceeded (the oracles refuse
    /// inputs whose factorial search space would not terminate promptly).
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    /// Inputs that are individually well-formed but mutually contradictory,
    /// e.g. a best-known value above a reported primal bound.
    #[error("inconsistent data: {0}")]
    InconsistentData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for a [`Error::Parse`] at a 1-based line number.
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
