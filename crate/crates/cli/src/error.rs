use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Clap(#[from] clap::Error),

    #[error(transparent)]
    Core(#[from] latent_hazard::Error),
}

impl CliError {
    /// 0 success, 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> u8 {
        use latent_hazard::Error as E;
        match self {
            Self::Usage(_) => 1,
            Self::Clap(e) if !e.use_stderr() => 0,
            Self::Clap(_) => 1,
            Self::Core(E::NumericRange(_)) => 3,
            Self::Core(E::InvalidParameter(_)) => 1,
            Self::Core(_) => 2,
        }
    }

    pub fn report(&self) -> ExitCode {
        match self {
            Self::Clap(e) => {
                let _ = e.print();
            }
            other => eprintln!("lshm: error: {other}"),
        }
        ExitCode::from(self.exit_code())
    }
}

/// Unwraps a path flag that may also come from the config file.
pub fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}
