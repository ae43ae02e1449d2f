use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: curve {curve}, segment {segment} has zero length")]
    DegenerateSegment { curve: String, segment: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid anisotropy for curve {curve}: {reason}")]
    InvalidAnisotropy { curve: usize, reason: String },

    #[error("singular linear system: zero pivot at row {row}")]
    SingularMatrix { row: usize },

    #[error("Picard iteration did not converge after {iters} iterations (residual {residual:e})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("step failed at t = {time}, island {island}: {source}")]
    Step {
        time: f64,
        island: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("topology surgery failed: {0}")]
    Surgery(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("convergence study aborted at level {level}: {source}")]
    Study {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateSegment { .. } => "degenerate-geometry",
            Error::Contract(_) => "contract",
            Error::InvalidCurve(_) => "invalid-curve",
            Error::InvalidAnisotropy { .. } => "invalid-anisotropy",
            Error::SingularMatrix { .. } => "singular-matrix",
            Error::NonConvergence { .. } => "nonconvergence",
            Error::Step { .. } => "step",
            Error::Surgery(_) => "surgery",
            Error::InvalidRegion(_) => "invalid-region",
            Error::UnknownPreset(_) => "unknown-preset",
            Error::Config(_) => "config",
            Error::Study { .. } => "study",
            Error::Io(_) => "io",
        }
    }
}
