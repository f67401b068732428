use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("stability violation at site {site}: total outflow {outflow} exceeds 1")]
    Stability { site: usize, outflow: f64 },

    #[error("negative value {value} at site {site}")]
    NegativeEnergy { site: usize, value: f64 },

    #[error("side {side} is not divisible by {factor}")]
    Divisibility { side: usize, factor: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Snapshot(#[from] SnapshotError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Structured failures when decoding a binary snapshot.
#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("bad magic bytes {0:?}, expected \"CMLD\"")]
    BadMagic([u8; 4]),

    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),

    #[error("unknown element kind {0}")]
    UnknownKind(u8),

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("field name is not valid UTF-8")]
    InvalidName,

    #[error("no field named `{0}`")]
    MissingField(String),

    #[error("truncated or unreadable snapshot: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
