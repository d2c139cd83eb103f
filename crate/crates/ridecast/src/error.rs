use thiserror::Error;

/// Unified error type for the ridecast pipeline.
#[derive(Debug, Error)]
pub enum RidecastError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("GPX parse error: {0}")]
    Gpx(String),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("route too short: need at least {need} points, got {got}")]
    RouteTooShort { need: usize, got: usize },

    #[error("invalid coordinate at point {index}: lat {lat}, lon {lon}")]
    InvalidCoordinate { index: usize, lat: f64, lon: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed record in {file} at line {line}: {reason}")]
    MalformedRecord {
        file: String,
        line: u64,
        reason: String,
    },

    #[error("schema mismatch: model expects {expected}, input has {actual}")]
    SchemaMismatch { expected: String, actual: String },

    #[error("model not converged after {iterations} iterations (last coefficient change {delta:.3e})")]
    NotConverged { iterations: usize, delta: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("track too short: total distance {total:.1} m is less than one resample step ({step} m)")]
    ZeroLengthTrack { total: f64, step: f64 },

    #[error("duplicate day in load history: {0}")]
    DuplicateDay(chrono::NaiveDate),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),

    #[error("no route profile for activity {0}")]
    MissingProfile(String),

    #[error("load history does not cover the requested dates: {0}")]
    MissingLoadHistory(String),
}

pub type Result<T> = std::result::Result<T, RidecastError>;
