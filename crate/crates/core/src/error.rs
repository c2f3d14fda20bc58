use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("rank exceeds dimension: rank {rank} > n {n}")]
    RankExceedsDimension { rank: usize, n: usize },

    #[error("probe stream exhausted: all {n} unit vectors already drawn without replacement")]
    Exhausted { n: usize },

    #[error("non-finite sample at draw {index}")]
    NonFiniteSample { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid tolerance: {0}")]
    Tolerance(String),

    #[error("invalid K_G {0}: must lie in (0, 1]")]
    InvalidKg(f64),

    #[error("bound unreachable: no N <= {cap} satisfies the necessary condition")]
    BoundUnreachable { cap: u64 },

    #[error("not SPSD: {0}")]
    NotSpsd(String),

    #[error("zero trace")]
    ZeroTrace,

    #[error("power iteration did not converge after {iters} iterations (best estimate {estimate})")]
    NoConvergence { iters: usize, estimate: f64 },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Process exit status: 2 for bad input, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFiniteSample { .. }
            | Error::BoundUnreachable { .. }
            | Error::NotSpsd(_)
            | Error::ZeroTrace
            | Error::NoConvergence { .. } => 3,
            _ => 2,
        }
    }
}
