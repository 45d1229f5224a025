//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide error enumeration.
///
/// The command-line front end maps these onto process exit codes:
/// configuration, parsing, and I/O problems exit 2; numerical instability
/// exits 3; domain violations (non-positive field values, out-of-range
/// sites, invalid tolerances) exit 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration invariant was violated; the message names it.
    #[error("configuration error: {0}")]
    Config(String),

    /// A requested operation is not defined for the configured mode.
    #[error("unsupported mode: {0}")]
    Unsupported(String),

    /// Operator, field, or ghost dimensions disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A numeric precondition was violated (sign, range, positivity).
    #[error("domain error: {0}")]
    Domain(String),

    /// A site index fell outside the network.
    #[error("site out of range: j={j}, n={n}")]
    SiteOutOfRange { j: usize, n: usize },

    /// The explicit relaxation diverged.
    #[error(
        "numerical instability at tick {tick}: residual {residual:e} exceeded 10x its running \
         minimum {min_residual:e}; increase substeps"
    )]
    Unstable {
        tick: u64,
        residual: f64,
        min_residual: f64,
    },

    /// Malformed textual input (CSV field tables, key=value configs).
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying filesystem failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_name_the_problem() {
        let e = Error::Config("width must be even".into());
        assert_eq!(e.to_string(), "configuration error: width must be even");
        let e = Error::SiteOutOfRange { j: 9, n: 1 };
        assert!(e.to_string().contains("j=9"));
        let e = Error::Unstable {
            tick: 621,
            residual: 1e12,
            min_residual: 0.5,
        };
        assert!(e.to_string().contains("tick 621"));
        assert!(e.to_string().contains("increase substeps"));
    }
}
