use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] cutnitsche_core::Error),
    #[error("singular system")]
    Singular,
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("level {level} failed")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
