use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time alignment failed: {0}")]
    Alignment(String),

    #[error("partial day {date}: forecast must cover whole days of 24 hourly values")]
    PartialDay { date: String },

    #[error("non-positive value {value} at {at}; log transform needs strictly positive data")]
    NonPositive { at: String, value: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("feature schema mismatch, missing columns: {}", .missing.join(", "))]
    SchemaMismatch { missing: Vec<String> },

    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Alignment(_) => "alignment",
            Error::PartialDay { .. } => "partial_day",
            Error::NonPositive { .. } => "non_positive",
            Error::InsufficientData(_) => "insufficient_data",
            Error::DuplicateColumn(_) => "duplicate_column",
            Error::SchemaMismatch { .. } => "schema_mismatch",
            Error::Parse { .. } => "parse",
            Error::Singular(_) => "singular",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
