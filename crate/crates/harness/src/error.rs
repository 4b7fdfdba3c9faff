//! Harness-level errors: configuration problems plus everything from the
//! core library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] depthtest_core::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("series error: {0}")]
    Series(String),

    #[error("pointwise standard deviation is zero at point {point} in the {side} ensemble")]
    ZeroSd { side: &'static str, point: usize },

    #[error("degenerate trend fit: {0}")]
    DegenerateTrend(String),

    #[error("no proxies available at time {0}")]
    NoActiveProxies(f64),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
