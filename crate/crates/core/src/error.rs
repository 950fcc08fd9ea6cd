use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole of the gamma function at {re}{im:+}i")]
    Pole { re: f64, im: f64 },

    #[error("Barnes G vanishes at 1 + ({re}{im:+}i)")]
    Zero { re: f64, im: f64 },

    #[error("{what}: argument {value} outside the supported range")]
    Range { what: &'static str, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no convergence: estimated error {est_error:e} exceeds tolerance {tol:e} at {nodes} nodes per interval")]
    NoConvergence {
        est_error: f64,
        tol: f64,
        nodes: usize,
    },

    #[error("non-finite result in {0}")]
    NonFinite(&'static str),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit status the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoConvergence { .. } => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
