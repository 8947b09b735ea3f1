use efd_core::anyontheory::TheoryError;
use efd_core::condensate::CondensateError;
use efd_core::efdloop::EfdError;
use efd_core::isingmc::McError;
use efd_core::stabilizer::StabilizerError;
use thiserror::Error;

/// Process exit codes.
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_STATISTICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("statistical failure: {0}")]
    Statistical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::Resource(_) => EXIT_RESOURCE,
            CliError::Statistical(_) => EXIT_STATISTICAL,
        }
    }
}

impl From<TheoryError> for CliError {
    fn from(e: TheoryError) -> Self {
        match e {
            TheoryError::GroupTooLarge(_) => CliError::Resource(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CondensateError> for CliError {
    fn from(e: CondensateError) -> Self {
        match e {
            CondensateError::SearchSpaceTooLarge { .. } => CliError::Resource(e.to_string()),
            CondensateError::Theory(t) => t.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<EfdError> for CliError {
    fn from(e: EfdError) -> Self {
        match e {
            EfdError::TooLarge { .. } => CliError::Resource(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::NoCrossingInGrid | McError::ChainNotConverged { .. } => CliError::Statistical(e.to_string()),
            McError::Loop(inner) => inner.into(),
            McError::InvalidConfig(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<StabilizerError> for CliError {
    fn from(e: StabilizerError) -> Self {
        CliError::Input(e.to_string())
    }
}
