use thiserror::Error;

#[derive(Debug, Error)]
pub enum LadoError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("time step {t} out of range 1..={horizon}")]
    StepOutOfRange { t: usize, horizon: usize },
    #[error("missing prediction for agent {agent} at step {t}")]
    MissingPrediction { agent: usize, t: usize },
    #[error("robust action set empty for agent {agent} at step {t} (expert slack {slack:e})")]
    EmptyRobustSet { agent: usize, t: usize, slack: f64 },
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("episode {episode}: {source}")]
    Episode {
        episode: usize,
        #[source]
        source: Box<LadoError>,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LadoError {
    /// Stable snake_case tag; episode errors report the kind of their cause.
    pub fn kind(&self) -> &'static str {
        match self {
            LadoError::InvalidNetwork(_) => "invalid_network",
            LadoError::DimensionMismatch(_) => "dimension_mismatch",
            LadoError::InvalidArgument(_) => "invalid_argument",
            LadoError::StepOutOfRange { .. } => "step_out_of_range",
            LadoError::MissingPrediction { .. } => "missing_prediction",
            LadoError::EmptyRobustSet { .. } => "empty_robust_set",
            LadoError::SolveFailed(_) => "solve_failed",
            LadoError::Episode { source, .. } => source.kind(),
            LadoError::Parse(_) => "parse",
            LadoError::Io(_) => "io",
            LadoError::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = LadoError> = std::result::Result<T, E>;
