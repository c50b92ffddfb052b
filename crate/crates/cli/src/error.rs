use std::fmt;

use qdist_core::error::QdistError;

#[derive(Debug)]
pub enum CliError {
    Core(QdistError),
    /// Unreadable or unwritable files.
    Io(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(e) => match e {
                QdistError::InvalidInput(_)
                | QdistError::DimensionMismatch { .. }
                | QdistError::NotHermitian { .. }
                | QdistError::NotTraceless { .. }
                | QdistError::InvalidCertificate(_) => 1,
                QdistError::NotControllable(_) => 2,
                QdistError::SizeGuard(_) => 3,
                QdistError::Numerical(_) => 4,
            },
            Self::Io(_) => 1,
            Self::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Core(e) => write!(f, "{e}"),
            Self::Io(m) | Self::Internal(m) => f.write_str(m),
        }
    }
}

impl From<QdistError> for CliError {
    fn from(e: QdistError) -> Self {
        Self::Core(e)
    }
}
