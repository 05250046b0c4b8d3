use std::process::ExitCode;

use thiserror::Error;

/// Failures, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid flags, config or parameters (exit 2).
    #[error("{0}")]
    Usage(String),

    /// Classification or numeric setup failed (exit 3).
    #[error("{0}")]
    Setup(String),

    /// The entropy estimator could not be evaluated (exit 4).
    #[error("{0}")]
    Estimator(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Setup(_) => 3,
            CliError::Estimator(_) => 4,
        })
    }
}

impl From<kext_core::Error> for CliError {
    fn from(e: kext_core::Error) -> Self {
        use kext_core::Error::*;
        match e {
            Domain(_) | Parse(_) => CliError::Usage(e.to_string()),
            Classification(_) | Numeric(_) | Quadrature(..) => CliError::Setup(e.to_string()),
            Estimator(_) => CliError::Estimator(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Setup(format!("i/o error: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let code = |e: kext_core::Error| CliError::from(e).exit_code();
        assert_eq!(code(kext_core::Error::Parse("x".into())), ExitCode::from(2));
        assert_eq!(code(kext_core::Error::Domain("x".into())), ExitCode::from(2));
        assert_eq!(code(kext_core::Error::Classification("x".into())), ExitCode::from(3));
        assert_eq!(code(kext_core::Error::Numeric("x".into())), ExitCode::from(3));
        assert_eq!(code(kext_core::Error::Estimator("3 tied values".into())), ExitCode::from(4));
    }
}
