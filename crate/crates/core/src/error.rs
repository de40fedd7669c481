//! Crate-wide error type.
//!
//! Errors fall into three camps that the CLI maps onto distinct exit codes:
//! configuration problems (bad flags, malformed config files, invalid
//! parameter combinations), computation failures (singular systems, solver
//! breakdowns, ill-posed data), and I/O failures.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied configuration: bad value, missing key,
    /// inconsistent parameter combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// Numerical computation failed or preconditions on the data were
    /// violated (singular matrix, non-finite samples, dimension mismatch).
    #[error("computation error: {0}")]
    Computation(String),

    /// Reading or writing files failed.
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 = config, 3 = computation, 4 = I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Computation(_) => 3,
            Error::Io(_) => 4,
        }
    }
}
