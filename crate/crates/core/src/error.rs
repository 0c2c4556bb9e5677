use thiserror::Error;

/// Failure categories surfaced by the library. The CLI maps `Config` onto a
/// distinct exit code, so anything a user can fix by changing flags or the
/// environment must use that variant.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("prompt render error: {0}")]
    Render(String),

    #[error("scoring error: {0}")]
    Scoring(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("record error: {0}")]
    Record(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("request rejected with status {status}: {body}")]
    Request { status: u16, body: String },

    #[error("forge error: {0}")]
    Forge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
