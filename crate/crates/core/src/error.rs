use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed vote data, reported with the 1-based source line.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A precondition or parameter invariant was violated.
    #[error("{0}")]
    InvalidInput(String),

    /// Fewer eligible users than requested by a sampling operation.
    #[error("requested {requested} test users but only {eligible} have at least {min_votes} votes")]
    NotEnoughUsers {
        requested: usize,
        eligible: usize,
        min_votes: usize,
    },

    /// Rank correlation needs at least two overlapping films.
    #[error("insufficient overlaps: need at least 2 ranked pairs, got {0}")]
    InsufficientOverlaps(usize),

    /// The differentiation pass never drove an antibody to saturation.
    /// The state is left partially differentiated for inspection.
    #[error("differentiation did not saturate any antibody within {0} iterations")]
    DifferentiationCap(usize),

    /// Every paired difference is zero, so no signed-rank test is possible.
    #[error("all paired differences are zero; no signed-rank test possible")]
    AllDifferencesZero,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
