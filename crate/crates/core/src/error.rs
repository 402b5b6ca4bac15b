use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent shapes or an invalid configuration value.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller-supplied value is out of range (action index, sweep parameter, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A linear system stayed singular even after regularization.
    #[error("numeric error: {message} (condition estimate {condition:.3e})")]
    Numeric { message: String, condition: f64 },

    /// An environment was driven outside its protocol (e.g. stepped after `done`).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed checkpoint or CSV contents.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
