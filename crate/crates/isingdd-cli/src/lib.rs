//! Experiment plumbing behind the `isingdd` binary: configuration, sweep
//! execution, CSV/JSON artifacts and the checksum manifest.

pub mod config;
pub mod experiment;
pub mod manifest;
pub mod tables;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments: exit status 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while simulating or writing results: exit status 1.
    #[error("simulation error: {0}")]
    Sim(#[from] isingdd::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Sim(_) | CliError::Io(_) => 1,
        }
    }
}

/// Library errors that stem from the request itself rather than the numerics.
pub fn classify(e: isingdd::Error) -> CliError {
    use isingdd::Error as E;
    match e {
        E::InvalidGraph(_)
        | E::NotBipartite(_)
        | E::InvalidGate(_)
        | E::InvalidInput(_)
        | E::InvalidPulse(_)
        | E::InfeasibleHarmonics { .. }
        | E::DimensionOverflow(_)
        | E::NotSymmetric(_) => CliError::Config(e.to_string()),
        other => CliError::Sim(other),
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Sizes the global rayon pool: `threads`, else `ISINGDD_THREADS`, else rayon's default.
pub fn init_threads(threads: Option<usize>) -> CliResult<()> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var("ISINGDD_THREADS") {
            Ok(v) if !v.trim().is_empty() => {
                Some(v.trim().parse::<usize>().map_err(|_| CliError::Config(format!("ISINGDD_THREADS = {v:?} is not a count")))?)
            }
            _ => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
