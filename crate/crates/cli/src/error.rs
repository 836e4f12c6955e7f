use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse scenario: {0}")]
    Parse(String),

    #[error("invalid payload: {0}")]
    Validation(String),

    #[error("solver did not converge: {0}")]
    Solver(String),

    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn from_core(e: hdsteer::Error) -> Self {
        match e {
            hdsteer::Error::Solver(s) => Self::Solver(s.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse(_) => 2,
            Self::Validation(_) => 3,
            Self::Solver(_) => 4,
            Self::Output(_) => 1,
        }
    }
}
