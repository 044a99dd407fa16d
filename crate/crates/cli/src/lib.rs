//! Command-line front end for `fescale-core`: configuration files, built-in
//! benchmarks, the mesh exchange format and CSV reporting.

use std::path::PathBuf;

pub mod benchmarks;
pub mod config;
pub mod meshio;
pub mod selfcheck;
pub mod suite;

pub use config::{load_config, RunConfig};
pub use suite::{run_suite, SuiteOutcome};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("{}:{line}: {message}", path.display())]
    Mesh {
        path: PathBuf,
        line: usize,
        message: String,
    },
}
