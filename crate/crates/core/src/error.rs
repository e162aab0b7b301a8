use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("population {population} exceeded cap {cap} at t = {time}")]
    Explosion {
        time: f64,
        population: usize,
        cap: usize,
    },

    #[error("non-finite total rate {rate} at t = {time}")]
    NonFiniteRate { time: f64, rate: f64 },

    #[error("replica {index}: {source}")]
    Replica {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("kernel too spread: <a> - delta(h) <= 0 for every h in (0, 1)")]
    KernelTooSpread,

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for population-cap breaches, including ones wrapped with a
    /// replica index.
    pub fn is_explosion(&self) -> bool {
        match self {
            Error::Explosion { .. } => true,
            Error::Replica { source, .. } => source.is_explosion(),
            _ => false,
        }
    }

    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Replica { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
