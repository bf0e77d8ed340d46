use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probability `{name}` must lie strictly inside (0, 1), got {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("numerical routine did not converge: {0}")]
    NonConvergence(String),

    #[error("{measure} requires a finite {moment} (tail index {gamma} must be below {limit})")]
    InfiniteMoment {
        measure: &'static str,
        moment: &'static str,
        gamma: f64,
        limit: f64,
    },

    #[error("sample too small: need at least {needed} observations, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("threshold k = {k} out of range for sample size n = {n} (need 1 <= k <= n - 1)")]
    KOutOfRange { k: usize, n: usize },

    #[error("Hill estimator needs positive top order statistics, but X(n-{k},n) = {value}")]
    NonPositiveThreshold { k: usize, value: f64 },

    #[error(
        "level {tau} is too extreme for n = {n}: floor(n(1 - tau)) = 0; use the extreme-level (extrapolated) estimator"
    )]
    LevelTooExtreme { tau: f64, n: usize },

    #[error("{measure} estimator undefined for estimated tail index {gamma_hat} (needs 0 < gamma < {limit})")]
    TailIndexOutOfRange {
        measure: &'static str,
        gamma_hat: f64,
        limit: f64,
    },

    #[error("all {reps} replicates failed")]
    AllReplicatesFailed { reps: usize },

    #[error("{failed} of {reps} bootstrap replicates failed (more than 20%)")]
    TooManyBootstrapFailures { failed: usize, reps: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("dates not strictly increasing at line {line}: {prev} then {next}")]
    NonMonotoneDates {
        line: usize,
        prev: String,
        next: String,
    },

    #[error("split at {boundary} leaves an empty period")]
    EmptyPeriod { boundary: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}
