use climbing_ratings::evaluation::EvaluationError;
use climbing_ratings::ingest::IngestError;
use climbing_ratings::ratings::RatingsError;
use climbing_ratings::solver::SolverError;
use climbing_ratings::synthetic::SyntheticError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid input, exit code 1.
    #[error("{0}")]
    Input(String),
    /// Nothing left to work with, exit code 2.
    #[error("{0}")]
    Empty(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Empty(_) => 2,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::EmptyDataset => CliError::Empty(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::EmptyDataset => CliError::Empty(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Fit(e) => e.into(),
            EvaluationError::Empty => CliError::Empty(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<SyntheticError> for CliError {
    fn from(e: SyntheticError) -> Self {
        match e {
            SyntheticError::Ingest(e) => e.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<RatingsError> for CliError {
    fn from(e: RatingsError) -> Self {
        CliError::Input(e.to_string())
    }
}
