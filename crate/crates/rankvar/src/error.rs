use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for the library and CLI.
///
/// The CLI maps variants to process exit codes: anything wrong with the
/// inputs (domain, argument, parse, validation, io) exits 3, while hitting a
/// resource cap or an unreachable calibration target exits 4. Usage errors
/// (bad flags) are reported by the argument parser itself with exit 2.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs are individually well formed but mutually inconsistent.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An input file is malformed. `line` is 1-based and counts the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The file parsed but the data violate a structural requirement.
    #[error("invalid data: {0}")]
    Validation(String),

    /// Noise calibration could not reach the target probability. Carries the
    /// searched bracket and the achieved probabilities at its endpoints.
    #[error(
        "calibration failed: {message} (sd bracket [{sd_lo}, {sd_hi}] achieved \
         probabilities [{prob_at_hi}, {prob_at_lo}])"
    )]
    Calibration {
        message: String,
        sd_lo: f64,
        sd_hi: f64,
        prob_at_lo: f64,
        prob_at_hi: f64,
    },

    /// The request exceeds a hard resource cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Calibration { .. } | Error::Resource(_) => 4,
            _ => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_data_errors_from_resource_errors() {
        assert_eq!(Error::Domain("x".into()).exit_code(), 3);
        assert_eq!(
            Error::Parse { line: 3, message: "bad".into() }.exit_code(),
            3
        );
        assert_eq!(Error::Resource("m too large".into()).exit_code(), 4);
        assert_eq!(
            Error::Calibration {
                message: "unreachable".into(),
                sd_lo: 0.1,
                sd_hi: 10.0,
                prob_at_lo: 0.99,
                prob_at_hi: 0.01,
            }
            .exit_code(),
            4
        );
    }

    #[test]
    fn parse_errors_cite_the_line() {
        let e = Error::Parse { line: 17, message: "expected a number".into() };
        assert!(e.to_string().contains("line 17"));
    }
}
