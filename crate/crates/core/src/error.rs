//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed graph: {0}")]
    MalformedGraph(String),

    #[error("empty graph")]
    EmptyGraph,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bad weights: {0}")]
    BadWeights(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("store corruption in region `{region}`: {detail}")]
    StoreCorruption { region: String, detail: String },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
