use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("mode index {index} out of range for {count} modes")]
    InvalidMode { index: usize, count: usize },

    #[error("invalid maneuver model: {0}")]
    InvalidModel(String),

    #[error("{0} is not positive semidefinite")]
    NotPositiveSemidefinite(&'static str),

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("target is not in front of the image plane (camera-frame x = {0})")]
    BehindImagePlane(f64),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("vector has zero norm")]
    ZeroNorm,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid gains: {0}")]
    InvalidGains(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    TomlDe {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("failed to serialize config: {0}")]
    TomlSer(#[from] toml::ser::Error),
}
