use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("observation point y = {y} is unsafe: |sin({mode}·y)| = {min_abs_sin:e} below threshold {threshold:e}")]
    UnsafeObservationPoint {
        y: f64,
        mode: usize,
        min_abs_sin: f64,
        threshold: f64,
    },

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("rank deficient least-squares system (condition number {condition:e})")]
    RankDeficient { condition: f64 },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
