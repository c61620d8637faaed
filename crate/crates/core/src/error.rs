use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Field evaluation requested at or inside the source body.
    #[error("{} at distance {distance} m is inside the source (radius {radius} m)", describe_point(*.sensor))]
    PointInsideSource {
        sensor: Option<usize>,
        distance: f64,
        radius: f64,
    },

    #[error("invalid configuration: {field}: {reason}")]
    ConfigInvalid { field: String, reason: String },

    #[error("grid has no valid points")]
    EmptyGrid,

    /// The spatial fingerprint is identically zero, so the matched filter is undefined.
    #[error("spatial fingerprint has zero norm (source on every sensor's nodal plane)")]
    DegenerateFingerprint,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("channel count mismatch: expected {expected}, got {actual}")]
    ChannelCountMismatch { expected: usize, actual: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

fn describe_point(sensor: Option<usize>) -> String {
    match sensor {
        Some(i) => format!("sensor {i}"),
        None => "point".to_string(),
    }
}
