//! Plumbing behind the `bfchart` binary: CSV ingestion, reports and plots.

pub mod data;
pub mod plot;
pub mod report;

use std::fmt;

pub const EXIT_SIGNAL: i32 = 10;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_SCHEMA: i32 = 4;
pub const EXIT_CALIBRATION: i32 = 5;

/// An error together with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::usage(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<bfchart::Error> for Failure {
    fn from(e: bfchart::Error) -> Self {
        use bfchart::Error as E;
        let code = match &e {
            E::DegenerateFit
            | E::NonStationary(_)
            | E::ZeroVariance
            | E::NotPositiveDefinite
            | E::CovarianceNotReady { .. } => EXIT_DEGENERATE,
            E::Schema(_) => EXIT_SCHEMA,
            E::BracketFailure { .. } => EXIT_CALIBRATION,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(Failure::from(bfchart::Error::DegenerateFit).code, 3);
        assert_eq!(Failure::from(bfchart::Error::Schema("x".into())).code, 4);
        let b = bfchart::Error::BracketFailure {
            target: 1.0,
            lo: 0.0,
            hi: 1.0,
        };
        assert_eq!(Failure::from(b).code, 5);
        assert_eq!(Failure::from(bfchart::Error::EmptyInput).code, 2);
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
